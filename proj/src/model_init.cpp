#include "aesz/model_init.hpp"

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "aesz/core.hpp"

namespace aesz {

namespace {

std::size_t tap_index(int dims, int dz, int dy, int dx) {
    const int t = (dy + 1) * 3 + (dx + 1);
    return static_cast<std::size_t>(dims == 3 ? (dz + 1) * 9 + t : t);
}

// Sub-position a in {0,1}^dim of sub-block slot p (z, y, x order).
std::array<int, 3> sub_position(int dims, std::size_t p) {
    std::array<int, 3> a{0, 0, 0};
    for (int axis = dims - 1, shift = 0; axis >= 0; --axis, ++shift) a[3 - dims + axis] = static_cast<int>((p >> shift) & 1u);
    return a;
}

void identity_taps(rowmat_f &kernel, std::size_t channels, std::size_t taps, std::size_t centre) {
    for (std::size_t c = 0; c < channels; ++c) kernel(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c * taps + centre)) = 1.0f;
}

// Input channel c at sub-position a  <->  channel c * P + p at the coarse site.
void space_to_depth_taps(rowmat_f &kernel, int dims, std::size_t channels, std::size_t taps) {
    const std::size_t P = std::size_t{1} << dims;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t p = 0; p < P; ++p) {
            const auto a = sub_position(dims, p);
            kernel(static_cast<Eigen::Index>(c * P + p), static_cast<Eigen::Index>(c * taps + tap_index(dims, a[0], a[1], a[2]))) = 1.0f;
        }
}

}  // namespace

WeightSet zero_weights(const NetworkConfig &cfg) { return make_weight_shapes(cfg); }

WeightSet random_weights(const NetworkConfig &cfg, std::uint64_t seed) {
    auto w = make_weight_shapes(cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::uniform_real_distribution<float> uniform(0.0f, 0.01f);
    const auto T = static_cast<float>(cfg.taps());

    auto fill = [&](auto &m, float scale) { m = m.unaryExpr([&](float) { return scale * normal(rng); }); };
    auto conv = [&](ConvLayer &l) {
        fill(l.kernel, 1.0f / std::sqrt(static_cast<float>(l.in) * T));
        fill(l.bias, 0.01f);
    };
    auto norm = [&](GdnParams &g) {
        g.beta.setOnes();
        g.gamma = g.gamma.unaryExpr([&](float) { return uniform(rng); });
        g.gamma.diagonal().array() += 0.1f;
    };
    for (auto &s: w.encoder) {
        conv(s.conv1);
        conv(s.conv2);
        norm(s.gdn);
    }
    fill(w.encoder_fc.weight, 1.0f / std::sqrt(static_cast<float>(w.encoder_fc.weight.cols())));
    fill(w.encoder_fc.bias, 0.01f);
    fill(w.decoder_fc.weight, 1.0f / std::sqrt(static_cast<float>(w.decoder_fc.weight.cols())));
    fill(w.decoder_fc.bias, 0.01f);
    for (auto &s: w.decoder) {
        conv(s.deconv1);
        conv(s.deconv2);
        norm(s.igdn);
    }
    conv(w.final_conv);
    return w;
}

bool supports_linear_fit(const NetworkConfig &cfg) {
    std::size_t used = 1;
    for (auto c: cfg.channels) {
        used <<= cfg.dimensionality;
        if (c < used) return false;
    }
    return cfg.latent_size <= cfg.block_points();
}

WeightSet fit_linear_autoencoder(const NetworkConfig &cfg, const Eigen::MatrixXd &blocks) {
    if (!supports_linear_fit(cfg)) throw usage_error("configuration cannot hold a lossless space-to-depth stack");
    const auto N = cfg.block_points();
    if (static_cast<std::size_t>(blocks.rows()) != N || blocks.cols() < 2) throw usage_error("training blocks must be S^dim x m, m >= 2");

    auto w = make_weight_shapes(cfg);
    const int dims = cfg.dimensionality;
    const auto T = cfg.taps();
    const auto centre = tap_index(dims, 0, 0, 0);
    const auto n = cfg.num_blocks();
    std::size_t used = 1;
    for (std::size_t k = 0; k < n; ++k, used <<= dims) {
        identity_taps(w.encoder[k].conv1.kernel, used, T, centre);
        space_to_depth_taps(w.encoder[k].conv2.kernel, dims, used, T);
        auto &dec = w.decoder[n - 1 - k];
        identity_taps(dec.deconv1.kernel, used << dims, T, centre);
        space_to_depth_taps(dec.deconv2.kernel, dims, used, T);
    }
    identity_taps(w.final_conv.kernel, 1, T, centre);

    // Locate every block point in the flattened bottom features by pushing
    // point indices (offset by one) through the encoder stack.
    std::vector<long> point_of(cfg.flat_size(), -1);
    {
        Eigen::VectorXf probe(static_cast<Eigen::Index>(N));
        for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = static_cast<float>(i + 1);
        FeatureMap x{dims, cfg.block_edge, probe.transpose()};
        for (const auto &stage: w.encoder) {
            x = conv(x, stage.conv1, 1);
            x = conv(x, stage.conv2, 2);
        }
        const rowmat_f flat = x.data;
        for (Eigen::Index f = 0; f < flat.size(); ++f) {
            const float v = flat.data()[f];
            if (v != 0.0f) point_of[static_cast<std::size_t>(f)] = static_cast<long>(v) - 1;
        }
    }

    const Eigen::VectorXd mean = blocks.rowwise().mean();
    const Eigen::MatrixXd centred = blocks.colwise() - mean;
    const Eigen::MatrixXd cov = centred * centred.transpose() / static_cast<double>(blocks.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const auto d = static_cast<Eigen::Index>(cfg.latent_size);
    // Eigenvalues ascend; take the last d columns, largest first.
    const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(d).rowwise().reverse();

    w.encoder_fc.bias = (-basis.transpose() * mean).cast<float>();
    for (std::size_t f = 0; f < point_of.size(); ++f) {
        if (point_of[f] < 0) continue;
        const auto j = static_cast<Eigen::Index>(point_of[f]);
        const auto fi = static_cast<Eigen::Index>(f);
        w.encoder_fc.weight.col(fi) = basis.row(j).transpose().cast<float>();
        w.decoder_fc.weight.row(fi) = basis.row(j).cast<float>();
        w.decoder_fc.bias(fi) = static_cast<float>(mean(j));
    }
    return w;
}

}  // namespace aesz
