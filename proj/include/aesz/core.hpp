#ifndef AESZ_CORE_HPP
#define AESZ_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aesz/byte_io.hpp"

namespace aesz {

/// Invalid arguments, shapes or bounds supplied by the caller.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using extents = std::vector<std::size_t>;

template<class T>
using array_t = Eigen::Array<T, Eigen::Dynamic, 1>;

enum class precision : std::uint8_t { f32 = 4, f64 = 8 };

template<class T>
constexpr precision precision_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? precision::f32 : precision::f64;
}

inline std::size_t product(const extents &dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

/// A 1-3 dimensional scalar field stored row-major (last axis fastest).
/// Immutable after construction; vmin/vmax are computed from the values.
template<class T>
class Field {
public:
    using scalar = T;

    Field() = default;

    Field(extents dims, array_t<T> values) : dims_(std::move(dims)), values_(std::move(values)) {
        if (dims_.empty() || dims_.size() > 3) throw usage_error("field must have 1 to 3 axes");
        for (auto n: dims_)
            if (n == 0) throw usage_error("field extent must be positive");
        if (product(dims_) != static_cast<std::size_t>(values_.size()))
            throw usage_error("field size does not match product of dims");
        if (!values_.isFinite().all()) throw usage_error("field contains non-finite values");
        vmin_ = values_.minCoeff();
        vmax_ = values_.maxCoeff();
    }

    Field(extents dims, std::span<const T> values)
        : Field(std::move(dims), array_t<T>(Eigen::Map<const array_t<T>>(values.data(), values.size()))) {}

    const extents &dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    const array_t<T> &values() const { return values_; }
    std::span<const T> span() const { return {values_.data(), size()}; }
    T vmin() const { return vmin_; }
    T vmax() const { return vmax_; }
    double value_range() const { return static_cast<double>(vmax_) - static_cast<double>(vmin_); }
    static constexpr aesz::precision source_precision() { return precision_of<T>(); }

private:
    extents dims_;
    array_t<T> values_;
    T vmin_{0};
    T vmax_{0};
};

/// Absolute and relative error bounds. `latent` is filled in by the pipeline
/// once the latent range is known.
struct ErrorBound {
    double epsilon = 0;  // relative to the value range
    double abs = 0;      // in data units
    double latent = 0;   // for latent elements

    static ErrorBound relative(double epsilon, double value_range) {
        if (!(epsilon > 0) || !std::isfinite(epsilon)) throw usage_error("relative error bound must be positive");
        return {epsilon, epsilon * value_range, 0};
    }

    static ErrorBound absolute(double e, double value_range) {
        if (!(e > 0) || !std::isfinite(e)) throw usage_error("absolute error bound must be positive");
        return {value_range > 0 ? e / value_range : 0, e, 0};
    }
};

template<class T>
struct Block {
    extents origin;
    extents extent;
    array_t<T> data;
    bool complete = false;

    std::size_t size() const { return static_cast<std::size_t>(data.size()); }
};

/// Tiling of a field into S-edged blocks, ordered lexicographically by origin.
class BlockGrid {
public:
    BlockGrid(extents dims, std::size_t edge) : dims_(std::move(dims)), edge_(edge) {
        if (edge_ < 2) throw usage_error("block edge must be at least 2");
        if (dims_.empty() || dims_.size() > 3) throw usage_error("field must have 1 to 3 axes");
        for (auto n: dims_) counts_.push_back((n + edge_ - 1) / edge_);
    }

    std::size_t edge() const { return edge_; }
    const extents &dims() const { return dims_; }
    const extents &counts() const { return counts_; }
    std::size_t block_count() const { return product(counts_); }

    extents origin(std::size_t index) const {
        extents o(dims_.size());
        for (std::size_t k = dims_.size(); k-- > 0;) {
            o[k] = (index % counts_[k]) * edge_;
            index /= counts_[k];
        }
        return o;
    }

    extents extent_at(const extents &origin) const {
        extents e(dims_.size());
        for (std::size_t k = 0; k < dims_.size(); ++k) e[k] = std::min(edge_, dims_[k] - origin[k]);
        return e;
    }

    bool complete(const extents &extent) const {
        return std::all_of(extent.begin(), extent.end(), [&](auto n) { return n == edge_; });
    }

    template<class T>
    Block<T> extract(std::span<const T> values, std::size_t index) const {
        Block<T> b;
        b.origin = origin(index);
        b.extent = extent_at(b.origin);
        b.complete = complete(b.extent);
        b.data.resize(static_cast<Eigen::Index>(product(b.extent)));
        std::size_t i = 0;
        for_each_row(b.origin, b.extent, [&](std::size_t offset, std::size_t len) {
            std::copy_n(values.data() + offset, len, b.data.data() + i);
            i += len;
        });
        return b;
    }

    template<class T>
    void insert(std::span<T> values, const extents &origin, const extents &extent, std::span<const T> data) const {
        std::size_t i = 0;
        for_each_row(origin, extent, [&](std::size_t offset, std::size_t len) {
            std::copy_n(data.data() + i, len, values.data() + offset);
            i += len;
        });
    }

private:
    // Visits contiguous last-axis runs of a block in row-major order.
    template<class F>
    void for_each_row(const extents &origin, const extents &extent, F &&fn) const {
        const auto r = dims_.size();
        const std::size_t len = extent[r - 1];
        if (r == 1) {
            fn(origin[0], len);
        } else if (r == 2) {
            for (std::size_t i = 0; i < extent[0]; ++i) fn((origin[0] + i) * dims_[1] + origin[1], len);
        } else {
            for (std::size_t i = 0; i < extent[0]; ++i)
                for (std::size_t j = 0; j < extent[1]; ++j)
                    fn(((origin[0] + i) * dims_[1] + origin[1] + j) * dims_[2] + origin[2], len);
        }
    }

    extents dims_;
    std::size_t edge_;
    extents counts_;
};

template<class T>
std::vector<Block<T>> split_blocks(const Field<T> &field, std::size_t edge) {
    BlockGrid grid(field.dims(), edge);
    std::vector<Block<T>> blocks;
    blocks.reserve(grid.block_count());
    for (std::size_t b = 0; b < grid.block_count(); ++b) blocks.push_back(grid.extract(field.span(), b));
    return blocks;
}

template<class T>
Field<T> assemble_blocks(const extents &dims, std::size_t edge, const std::vector<Block<T>> &blocks) {
    BlockGrid grid(dims, edge);
    if (blocks.size() != grid.block_count()) throw usage_error("block count does not match grid");
    array_t<T> values(static_cast<Eigen::Index>(product(dims)));
    std::span<T> out(values.data(), static_cast<std::size_t>(values.size()));
    for (const auto &b: blocks) grid.insert<T>(out, b.origin, b.extent, {b.data.data(), b.size()});
    return Field<T>(dims, std::move(values));
}

inline double normalize_value(double x, double vmin, double vmax) {
    return 2.0 * (x - vmin) / (vmax - vmin) - 1.0;
}

inline double denormalize_value(double y, double vmin, double vmax) {
    return (y + 1.0) * 0.5 * (vmax - vmin) + vmin;
}

/// Maps block values linearly onto [-1, 1]. Requires vmax > vmin.
template<class T>
Block<T> normalize_block(const Block<T> &block, T vmin, T vmax) {
    if (!(vmax > vmin)) throw usage_error("normalization requires a non-degenerate value range");
    Block<T> out = block;
    const double lo = vmin, hi = vmax;
    out.data = block.data.unaryExpr([=](T x) { return static_cast<T>(normalize_value(x, lo, hi)); });
    return out;
}

template<class T>
Block<T> denormalize_block(const Block<T> &block, T vmin, T vmax) {
    if (!(vmax > vmin)) throw usage_error("normalization requires a non-degenerate value range");
    Block<T> out = block;
    const double lo = vmin, hi = vmax;
    out.data = block.data.unaryExpr([=](T y) { return static_cast<T>(denormalize_value(y, lo, hi)); });
    return out;
}

/// Reads a raw little-endian binary array of T with the given extents.
template<class T>
Field<T> ingest_field(const std::string &path, const extents &dims) {
    if (dims.empty() || dims.size() > 3) throw usage_error("dims must have 1 to 3 axes");
    for (auto n: dims)
        if (n == 0) throw usage_error("field extent must be positive");
    auto raw = read_file(path);
    if (raw.size() != product(dims) * sizeof(T))
        throw usage_error("file size " + std::to_string(raw.size()) + " does not match dims (expected " +
                          std::to_string(product(dims) * sizeof(T)) + " bytes)");
    array_t<T> values(static_cast<Eigen::Index>(product(dims)));
    std::memcpy(values.data(), raw.data(), raw.size());
    return Field<T>(dims, std::move(values));
}

template<class T>
void write_field(const std::string &path, const Field<T> &field) {
    write_file(path, {reinterpret_cast<const std::uint8_t *>(field.values().data()), field.size() * sizeof(T)});
}

}  // namespace aesz

#endif
