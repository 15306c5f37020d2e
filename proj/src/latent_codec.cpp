#include "aesz/latent_codec.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "aesz/entropy.hpp"

namespace aesz {

double latent_bound(double epsilon, double zmin, double zmax) {
    double range = zmax - zmin;
    if (!(range > 0)) range = std::max({std::fabs(zmin), std::fabs(zmax), 1.0});
    return 0.1 * epsilon * range;
}

bytes compress_latents(const LatentBuffer &buffer, const QuantizerConfig &q) {
    q.validate();
    const auto n = static_cast<std::size_t>(buffer.vectors.size());
    std::vector<std::uint32_t> codes(n);
    std::vector<float> unpredictable;
    const float *z = buffer.vectors.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto qz = quantize<float>(z[i], 0.0f, q);
        codes[i] = qz.code;
        if (!qz.predictable()) unpredictable.push_back(z[i]);
    }

    byte_writer out;
    out.put<std::uint64_t>(buffer.count());
    out.put<double>(q.e);
    out.put<double>(buffer.zmin);
    out.put<double>(buffer.zmax);
    if (n == 0) {
        out.put<std::uint64_t>(0);
    } else {
        const auto payload = huffman_encode(codes, q.alphabet);
        out.put<std::uint64_t>(payload.size());
        out.put_bytes(payload);
    }
    out.put<std::uint64_t>(unpredictable.size());
    out.put_array<float>(unpredictable);
    return out.take();
}

LatentBuffer decompress_latents(byte_reader &in, std::size_t count, std::size_t latent_size, std::uint32_t alphabet) {
    LatentBuffer buf;
    if (in.get<std::uint64_t>() != count) throw format_error("latent section: vector count mismatch");
    buf.e_latent = in.get<double>();
    buf.zmin = in.get<double>();
    buf.zmax = in.get<double>();
    const auto payload_len = in.get<std::uint64_t>();
    if (payload_len > in.remaining()) throw format_error("latent section: truncated payload");
    const auto payload = in.get_bytes(static_cast<std::size_t>(payload_len));
    const auto codes = payload_len ? huffman_decode(payload) : std::vector<std::uint32_t>{};
    const auto n_unpred = in.get<std::uint64_t>();
    if (n_unpred > in.remaining() / sizeof(float)) throw format_error("latent section: truncated unpredictable values");
    const auto unpred = in.get_array<float>(static_cast<std::size_t>(n_unpred));

    if (codes.size() != count * latent_size) throw format_error("latent section: element count mismatch");
    buf.vectors.resize(static_cast<Eigen::Index>(latent_size), static_cast<Eigen::Index>(count));
    if (count == 0) {
        if (n_unpred) throw format_error("latent section: stray unpredictable values");
        return buf;
    }
    if (!(buf.e_latent > 0) || !std::isfinite(buf.e_latent)) throw format_error("latent section: invalid bound");
    const QuantizerConfig q(buf.e_latent, alphabet);
    unpredictable_cursor<float> cursor(unpred);
    float *z = buf.vectors.data();
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] == QuantizerConfig::sentinel)
            z[i] = cursor.next();
        else
            z[i] = dequantize<float>(codes[i], 0.0f, q);
    }
    if (!cursor.exhausted()) throw format_error("latent section: unconsumed unpredictable values");
    return buf;
}

LatentBuffer decompress_latents(std::span<const std::uint8_t> encoded, std::size_t count, std::size_t latent_size,
                                std::uint32_t alphabet) {
    byte_reader in(encoded);
    auto buf = decompress_latents(in, count, latent_size, alphabet);
    if (!in.exhausted()) throw format_error("latent section: trailing bytes");
    return buf;
}

}  // namespace aesz
