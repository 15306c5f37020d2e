#ifndef AESZ_PIPELINE_HPP
#define AESZ_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "aesz/ae_model.hpp"
#include "aesz/core.hpp"
#include "aesz/latent_codec.hpp"
#include "aesz/lorenzo.hpp"
#include "aesz/quantizer.hpp"

namespace aesz {

/// Per-block predictor, packed two bits per block in the container.
enum class predictor_flag : std::uint8_t { lorenzo_classic = 0, lorenzo_mean = 1, ae = 2 };

/// Lorenzo wins ties.
inline predictor_flag select_predictor(double loss_ae, double loss_lorenzo,
                                       lorenzo_kind variant = lorenzo_kind::classic) {
    if (loss_lorenzo <= loss_ae)
        return variant == lorenzo_kind::mean ? predictor_flag::lorenzo_mean : predictor_flag::lorenzo_classic;
    return predictor_flag::ae;
}

std::vector<std::uint8_t> pack_flags(std::span<const predictor_flag> flags);
std::vector<predictor_flag> unpack_flags(std::span<const std::uint8_t> packed, std::size_t count);

struct section {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

/// Fixed-layout, uncompressed container header. Section offsets index the
/// body, which follows the header as one backend-compressed payload.
struct ContainerHeader {
    static constexpr std::uint16_t current_version = 1;
    static constexpr std::size_t encoded_size = 5 + 2 + 1 + 3 * 8 + 2 + 2 + 5 * 8 + 1 + 4 + 5 * 8 + 8 + 8 + 5 * 16 + 8;

    std::uint16_t version = current_version;
    std::uint8_t rank = 0;
    std::array<std::uint64_t, 3> dims{0, 0, 0};
    std::uint16_t block_edge = 0;
    std::uint16_t latent_size = 0;
    double epsilon = 0, e = 0, e_latent = 0, vmin = 0, vmax = 0;
    precision source = precision::f32;
    std::uint32_t alphabet = QuantizerConfig::default_alphabet;
    std::uint64_t block_count = 0;
    std::uint64_t ae_blocks = 0;
    std::uint64_t mean_blocks = 0;
    std::uint64_t unpredictable = 0;
    std::uint64_t latent_unpredictable = 0;
    std::uint64_t model_digest = 0;  // 0 when no model was used
    std::uint64_t body_size = 0;
    section flags, latents, means, codes, values;
    std::uint64_t payload_size = 0;

    extents field_dims() const { return extents(dims.begin(), dims.begin() + rank); }

    void write(byte_writer &out) const;
    static ContainerHeader read(byte_reader &in);
};

struct CompressOptions {
    unsigned threads = 1;
    std::uint32_t alphabet = QuantizerConfig::default_alphabet;
    /// Block edge when no model is given; 0 picks 256 / 32 / 8 for 1D / 2D / 3D.
    std::size_t block_edge = 0;
};

template<class T>
struct CompressReport {
    std::vector<predictor_flag> flags;
    std::vector<double> loss_ae;       // NaN where the AE was not evaluated
    std::vector<double> loss_lorenzo;  // preview l1 of the chosen Lorenzo variant
    std::size_t unpredictable = 0;
    double e_latent = 0;
    std::optional<Field<T>> reconstruction;  // compressor-side, when requested
    bool keep_reconstruction = false;

    std::size_t count(predictor_flag f) const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), f)); }
    double ae_fraction() const { return flags.empty() ? 0.0 : static_cast<double>(count(predictor_flag::ae)) / flags.size(); }
};

/// Predicted-block path: every point quantized against its own prediction.
template<class T>
LorenzoEncoded<T> quantize_against(const array_t<T> &data, const array_t<T> &predicted, const QuantizerConfig &q) {
    LorenzoEncoded<T> out;
    out.codes.resize(static_cast<std::size_t>(data.size()));
    out.reconstructed.resize(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto qz = quantize(data[i], predicted[i], q);
        out.codes[static_cast<std::size_t>(i)] = qz.code;
        if (!qz.predictable()) out.unpredictable.push_back(data[i]);
        out.reconstructed[i] = qz.reconstructed;
    }
    return out;
}

template<class T>
array_t<T> dequantize_against(std::span<const std::uint32_t> codes, unpredictable_cursor<T> &unpredictable,
                              const array_t<T> &predicted, const QuantizerConfig &q) {
    if (codes.size() != static_cast<std::size_t>(predicted.size())) throw format_error("block: code count mismatch");
    array_t<T> out(predicted.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out[ii] = codes[i] == QuantizerConfig::sentinel ? unpredictable.next() : dequantize(codes[i], predicted[ii], q);
    }
    return out;
}

/// Denormalized AE prediction of a block from its decompressed latent.
template<class T>
array_t<T> ae_predict(const BlockModel &model, const Eigen::VectorXf &latent, T vmin, T vmax) {
    const Eigen::VectorXf y = model.decode(latent);
    const double lo = vmin, hi = vmax;
    return y.unaryExpr([=](float v) { return static_cast<T>(denormalize_value(v, lo, hi)); }).template cast<T>().array();
}

template<class T>
Eigen::VectorXf ae_normalized_input(const Block<T> &block, T vmin, T vmax) {
    const double lo = vmin, hi = vmax;
    return block.data.unaryExpr([=](T x) { return static_cast<float>(normalize_value(x, lo, hi)); }).matrix();
}

/// Compresses a field. `model` may be null (Lorenzo-only mode); otherwise
/// its dimensionality must match the field.
template<class T>
bytes compress(const Field<T> &field, const ErrorBound &bound, const BlockModel *model, const CompressOptions &options = {},
               CompressReport<T> *report = nullptr);

/// Convenience overload that wraps a network configuration and weights.
template<class T>
bytes compress(const Field<T> &field, const ErrorBound &bound, const NetworkConfig &cfg, const WeightSet &w,
               const CompressOptions &options = {}) {
    const Autoencoder ae(cfg, w);
    return compress(field, bound, &ae, options);
}

ContainerHeader read_header(std::span<const std::uint8_t> container);

/// Thrown when the supplied model is not the one the container was built with.
class model_mismatch : public format_error {
public:
    using format_error::format_error;
};

struct DecompressOptions {
    unsigned threads = 1;
};

template<class T>
Field<T> decompress(std::span<const std::uint8_t> container, const BlockModel *model, const DecompressOptions &options = {});

using any_field = std::variant<Field<float>, Field<double>>;

/// Decompresses into the precision recorded in the header.
any_field decompress_any(std::span<const std::uint8_t> container, const BlockModel *model, const DecompressOptions &options = {});

/// Decoded (but not reconstructed) body sections, for inspection and checks.
template<class T>
struct ContainerSections {
    ContainerHeader header;
    std::vector<predictor_flag> flags;
    LatentBuffer latents;
    std::vector<T> means;
    std::vector<std::uint32_t> codes;
    std::vector<T> unpredictable;
};

template<class T>
ContainerSections<T> read_sections(std::span<const std::uint8_t> container);

/// Rewrites the flag bitmap of a container (used to exercise integrity checks).
bytes replace_flags(std::span<const std::uint8_t> container, std::span<const predictor_flag> flags);

}  // namespace aesz

#endif
