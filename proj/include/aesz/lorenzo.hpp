#ifndef AESZ_LORENZO_HPP
#define AESZ_LORENZO_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aesz/core.hpp"
#include "aesz/quantizer.hpp"

namespace aesz {

enum class lorenzo_kind : std::uint8_t { classic, mean };

template<class T>
struct LorenzoVariant {
    lorenzo_kind kind = lorenzo_kind::classic;
    T mean{0};  // meaningful only for lorenzo_kind::mean

    static LorenzoVariant classic() { return {lorenzo_kind::classic, T{0}}; }
    static LorenzoVariant with_mean(T m) { return {lorenzo_kind::mean, m}; }
};

template<class T>
struct LorenzoPreview {
    array_t<T> predicted;
    LorenzoVariant<T> variant;
    double l1 = 0;
};

template<class T>
struct LorenzoEncoded {
    std::vector<std::uint32_t> codes;
    std::vector<T> unpredictable;
    array_t<T> reconstructed;
};

namespace detail {

// Block extents padded to three axes with leading ones.
inline std::array<std::size_t, 3> as_3d(const extents &ext) {
    std::array<std::size_t, 3> n{1, 1, 1};
    const auto off = 3 - ext.size();
    for (std::size_t k = 0; k < ext.size(); ++k) n[off + k] = ext[k];
    return n;
}

// 7-term Lorenzo stencil over already-visited neighbours; anything outside
// the block reads as zero. Reduces to the 3-term (2D) and 1-term (1D) forms.
template<class T>
inline T lorenzo_predict(const T *v, const std::array<std::size_t, 3> &n, std::size_t i, std::size_t j, std::size_t k) {
    const std::size_t s0 = n[1] * n[2], s1 = n[2];
    const std::size_t at = i * s0 + j * s1 + k;
    auto get = [&](bool ok, std::size_t off) -> double { return ok ? static_cast<double>(v[at - off]) : 0.0; };
    const bool a = i > 0, b = j > 0, c = k > 0;
    const double p = get(a, s0) + get(b, s1) + get(c, 1)
                     - get(a && b, s0 + s1) - get(a && c, s0 + 1) - get(b && c, s1 + 1)
                     + get(a && b && c, s0 + s1 + 1);
    return static_cast<T>(p);
}

}  // namespace detail

/// Block mean kept inside [min, max] of the block; exact for constant blocks.
template<class T>
T block_mean(const array_t<T> &data) {
    const T lo = data.minCoeff(), hi = data.maxCoeff();
    if (lo == hi) return lo;
    const double m = data.template cast<double>().sum() / static_cast<double>(data.size());
    return std::clamp(static_cast<T>(m), lo, hi);
}

/// Classic-Lorenzo predictions from the original values of a block.
template<class T>
array_t<T> lorenzo_predict_original(const Block<T> &block) {
    const auto n = detail::as_3d(block.extent);
    array_t<T> pred(block.data.size());
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n[0]; ++i)
        for (std::size_t j = 0; j < n[1]; ++j)
            for (std::size_t k = 0; k < n[2]; ++k) pred[idx++] = detail::lorenzo_predict(block.data.data(), n, i, j, k);
    return pred;
}

/// Chooses between classic and mean Lorenzo by l1 prediction error on the
/// original values. Ties go to classic.
template<class T>
LorenzoPreview<T> lorenzo_preview(const Block<T> &block) {
    if (block.size() == 0) throw usage_error("lorenzo_preview: empty block");
    const array_t<double> x = block.data.template cast<double>();

    LorenzoPreview<T> out;
    out.predicted = lorenzo_predict_original(block);
    out.l1 = (x - out.predicted.template cast<double>()).abs().sum();

    const T mean = block_mean(block.data);
    const double mean_l1 = (x - static_cast<double>(mean)).abs().sum();
    if (mean_l1 < out.l1) {
        out.predicted.setConstant(mean);
        out.variant = LorenzoVariant<T>::with_mean(mean);
        out.l1 = mean_l1;
    }
    return out;
}

/// Quantization scan in row-major order. Classic predictions read the
/// reconstructed neighbours, so the output matches decompression exactly.
template<class T>
LorenzoEncoded<T> lorenzo_compress_block(const Block<T> &block, const LorenzoVariant<T> &variant, const QuantizerConfig &q) {
    const auto n = detail::as_3d(block.extent);
    LorenzoEncoded<T> out;
    out.codes.resize(block.size());
    out.reconstructed.resize(block.data.size());
    T *rec = out.reconstructed.data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n[0]; ++i)
        for (std::size_t j = 0; j < n[1]; ++j)
            for (std::size_t k = 0; k < n[2]; ++k, ++idx) {
                const T pred = variant.kind == lorenzo_kind::mean ? variant.mean : detail::lorenzo_predict(rec, n, i, j, k);
                const auto qz = quantize(block.data[idx], pred, q);
                out.codes[idx] = qz.code;
                if (!qz.predictable()) out.unpredictable.push_back(block.data[idx]);
                rec[idx] = qz.reconstructed;
            }
    return out;
}

template<class T>
array_t<T> lorenzo_decompress_block(std::span<const std::uint32_t> codes, unpredictable_cursor<T> &unpredictable,
                                    const LorenzoVariant<T> &variant, const QuantizerConfig &q, const extents &extent) {
    if (codes.size() != product(extent)) throw format_error("lorenzo block: code count does not match extent");
    const auto n = detail::as_3d(extent);
    array_t<T> rec(static_cast<Eigen::Index>(codes.size()));
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n[0]; ++i)
        for (std::size_t j = 0; j < n[1]; ++j)
            for (std::size_t k = 0; k < n[2]; ++k, ++idx) {
                if (codes[idx] == QuantizerConfig::sentinel) {
                    rec[idx] = unpredictable.next();
                    continue;
                }
                const T pred = variant.kind == lorenzo_kind::mean ? variant.mean
                                                                  : detail::lorenzo_predict(rec.data(), n, i, j, k);
                rec[idx] = dequantize(codes[idx], pred, q);
            }
    return rec;
}

}  // namespace aesz

#endif
