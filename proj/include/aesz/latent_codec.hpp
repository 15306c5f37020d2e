#ifndef AESZ_LATENT_CODEC_HPP
#define AESZ_LATENT_CODEC_HPP

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "aesz/byte_io.hpp"
#include "aesz/quantizer.hpp"

namespace aesz {

/// Latent vectors of the AE-predicted blocks, one column per block in block
/// scan order.
struct LatentBuffer {
    Eigen::MatrixXf vectors;  // d x count
    double e_latent = 0;
    double zmin = 0, zmax = 0;

    std::size_t count() const { return static_cast<std::size_t>(vectors.cols()); }
    std::size_t latent_size() const { return static_cast<std::size_t>(vectors.rows()); }
};

/// 0.1 * epsilon * (zmax - zmin). A degenerate latent range falls back to
/// max(|zmin|, |zmax|, 1) so the bound stays positive.
double latent_bound(double epsilon, double zmin, double zmax);

/// Each element is quantized against a zero prediction; no element depends
/// on any other, so removing a vector leaves the others unchanged.
inline float decode_latent_element(float z, const QuantizerConfig &q) { return quantize<float>(z, 0.0f, q).reconstructed; }

inline Eigen::VectorXf decode_latent_vector(const Eigen::VectorXf &z, const QuantizerConfig &q) {
    return z.unaryExpr([&](float v) { return decode_latent_element(v, q); });
}

/// Section layout: u64 vector count, f64 e_latent, f64 zmin, f64 zmax,
/// u64 payload length + Huffman payload, u64 unpredictable count + f32 values.
/// `q.e` is the latent bound.
bytes compress_latents(const LatentBuffer &buffer, const QuantizerConfig &q);

/// Decodes a latent section; the result holds the decompressed latents z_d.
LatentBuffer decompress_latents(byte_reader &in, std::size_t count, std::size_t latent_size, std::uint32_t alphabet);
LatentBuffer decompress_latents(std::span<const std::uint8_t> encoded, std::size_t count, std::size_t latent_size,
                                std::uint32_t alphabet);

}  // namespace aesz

#endif
