#include "aesz/ae_model.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "aesz/core.hpp"

namespace aesz {

namespace {

constexpr std::string_view weight_magic = "AESZW";
constexpr std::uint16_t weight_version = 1;

struct tap {
    int dz, dy, dx;
};

// Kernel taps in the row-major order of a (kz, ky, kx) kernel; offsets are
// relative to the centre.
const std::vector<tap> &taps_for(int dims) {
    static const auto make = [](int d) {
        std::vector<tap> t;
        const int zr = d == 3 ? 1 : 0;
        for (int dz = -zr; dz <= zr; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) t.push_back({dz, dy, dx});
        return t;
    };
    static const std::vector<tap> t2 = make(2), t3 = make(3);
    return dims == 3 ? t3 : t2;
}

struct spatial {
    std::size_t nz, n;  // nz == 1 for 2D
    std::size_t sites() const { return nz * n * n; }
    std::size_t index(std::size_t z, std::size_t y, std::size_t x) const { return (z * n + y) * n + x; }
    bool inside(long z, long y, long x) const {
        return z >= 0 && y >= 0 && x >= 0 && z < static_cast<long>(nz) && y < static_cast<long>(n) && x < static_cast<long>(n);
    }
};

spatial space(int dims, std::size_t edge) { return {dims == 3 ? edge : 1, edge}; }

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

void check_shape(bool ok, const std::string &what) {
    if (!ok) throw format_error("weight shape mismatch: " + what);
}

void check_conv(const ConvLayer &l, std::size_t in, std::size_t out, std::size_t taps, bool transposed, const std::string &what) {
    check_shape(l.in == in && l.out == out, what + " channels");
    if (transposed)
        check_shape(static_cast<std::size_t>(l.kernel.rows()) == in && static_cast<std::size_t>(l.kernel.cols()) == out * taps,
                    what + " kernel");
    else
        check_shape(static_cast<std::size_t>(l.kernel.rows()) == out && static_cast<std::size_t>(l.kernel.cols()) == in * taps,
                    what + " kernel");
    check_shape(static_cast<std::size_t>(l.bias.size()) == out, what + " bias");
}

void check_gdn(const GdnParams &g, std::size_t ch, const std::string &what) {
    check_shape(static_cast<std::size_t>(g.beta.size()) == ch, what + " beta");
    check_shape(static_cast<std::size_t>(g.gamma.rows()) == ch && static_cast<std::size_t>(g.gamma.cols()) == ch, what + " gamma");
    if (!(g.beta.array() > 0.0f).all()) throw format_error(what + ": beta must be positive");
    if (!(g.gamma.array() >= 0.0f).all()) throw format_error(what + ": gamma must be non-negative");
}

ConvLayer conv_shape(std::size_t in, std::size_t out, std::size_t taps, bool transposed) {
    ConvLayer l;
    l.in = in;
    l.out = out;
    l.kernel = transposed ? rowmat_f::Zero(in, out * taps) : rowmat_f::Zero(out, in * taps);
    l.bias = Eigen::VectorXf::Zero(out);
    return l;
}

GdnParams gdn_shape(std::size_t ch) { return {Eigen::VectorXf::Ones(ch), rowmat_f::Zero(ch, ch)}; }

// Visits every tensor of a weight set in file order.
template<class W, class F>
void for_each_tensor(W &w, F &&fn) {
    auto conv = [&](auto &l) {
        fn(l.kernel.data(), static_cast<std::size_t>(l.kernel.size()));
        fn(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    };
    auto norm = [&](auto &g) {
        fn(g.beta.data(), static_cast<std::size_t>(g.beta.size()));
        fn(g.gamma.data(), static_cast<std::size_t>(g.gamma.size()));
    };
    auto dense = [&](auto &d) {
        fn(d.weight.data(), static_cast<std::size_t>(d.weight.size()));
        fn(d.bias.data(), static_cast<std::size_t>(d.bias.size()));
    };
    for (auto &s: w.encoder) {
        conv(s.conv1);
        conv(s.conv2);
        norm(s.gdn);
    }
    dense(w.encoder_fc);
    dense(w.decoder_fc);
    for (auto &s: w.decoder) {
        conv(s.deconv1);
        conv(s.deconv2);
        norm(s.igdn);
    }
    conv(w.final_conv);
}

Eigen::MatrixXd gdn_norm(const Eigen::MatrixXd &x, const Eigen::VectorXf &beta, const rowmat_f &gamma) {
    Eigen::MatrixXd denom = gamma.cast<double>() * x.array().square().matrix();
    denom.colwise() += beta.cast<double>();
    return denom.array().sqrt().matrix();
}

}  // namespace

std::size_t NetworkConfig::block_points() const { return ipow(block_edge, dimensionality); }

std::size_t NetworkConfig::bottom_sites() const { return ipow(bottom_edge(), dimensionality); }

std::vector<std::size_t> NetworkConfig::encoder_trace() const {
    std::vector<std::size_t> t{block_edge};
    for (std::size_t k = 0; k < num_blocks(); ++k) t.push_back(t.back() / 2);
    return t;
}

void NetworkConfig::validate() const {
    if (dimensionality != 2 && dimensionality != 3) throw usage_error("network dimensionality must be 2 or 3");
    if (channels.empty() || channels.size() > 255) throw usage_error("network needs 1 to 255 stages");
    if (block_edge < 2 || block_edge > 65535) throw usage_error("block edge out of range");
    if (latent_size == 0 || latent_size > 65535) throw usage_error("latent size out of range");
    for (auto c: channels)
        if (c == 0 || c > 65535) throw usage_error("channel count out of range");
    if (channels.size() >= 64 || (block_edge >> channels.size()) == 0 ||
        (block_edge >> channels.size()) << channels.size() != block_edge)
        throw usage_error("block edge must be divisible by 2^stages");
}

WeightSet make_weight_shapes(const NetworkConfig &cfg) {
    cfg.validate();
    const auto T = cfg.taps();
    const auto &ch = cfg.channels;
    const auto n = cfg.num_blocks();
    WeightSet w;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t in = k == 0 ? 1 : ch[k - 1];
        w.encoder.push_back({conv_shape(in, ch[k], T, false), conv_shape(ch[k], ch[k], T, false), gdn_shape(ch[k])});
    }
    w.encoder_fc = {rowmat_f::Zero(cfg.latent_size, cfg.flat_size()), Eigen::VectorXf::Zero(cfg.latent_size)};
    w.decoder_fc = {rowmat_f::Zero(cfg.flat_size(), cfg.latent_size), Eigen::VectorXf::Zero(cfg.flat_size())};
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = n - 1 - j;
        const std::size_t out = k > 0 ? ch[k - 1] : ch[0];
        w.decoder.push_back({conv_shape(ch[k], ch[k], T, true), conv_shape(ch[k], out, T, true), gdn_shape(out)});
    }
    w.final_conv = conv_shape(ch[0], 1, T, false);
    return w;
}

void validate_weights(const NetworkConfig &cfg, const WeightSet &w) {
    const auto ref = make_weight_shapes(cfg);
    const auto T = cfg.taps();
    check_shape(w.encoder.size() == ref.encoder.size() && w.decoder.size() == ref.decoder.size(), "stage count");
    for (std::size_t k = 0; k < ref.encoder.size(); ++k) {
        const auto tag = "encoder stage " + std::to_string(k);
        const auto &r = ref.encoder[k];
        check_conv(w.encoder[k].conv1, r.conv1.in, r.conv1.out, T, false, tag + " conv1");
        check_conv(w.encoder[k].conv2, r.conv2.in, r.conv2.out, T, false, tag + " conv2");
        check_gdn(w.encoder[k].gdn, r.conv2.out, tag + " gdn");
    }
    auto dense = [&](const DenseLayer &d, const DenseLayer &r, const std::string &tag) {
        check_shape(d.weight.rows() == r.weight.rows() && d.weight.cols() == r.weight.cols(), tag + " weight");
        check_shape(d.bias.size() == r.bias.size(), tag + " bias");
    };
    dense(w.encoder_fc, ref.encoder_fc, "encoder fc");
    dense(w.decoder_fc, ref.decoder_fc, "decoder fc");
    for (std::size_t j = 0; j < ref.decoder.size(); ++j) {
        const auto tag = "decoder stage " + std::to_string(j);
        const auto &r = ref.decoder[j];
        check_conv(w.decoder[j].deconv1, r.deconv1.in, r.deconv1.out, T, true, tag + " deconv1");
        check_conv(w.decoder[j].deconv2, r.deconv2.in, r.deconv2.out, T, true, tag + " deconv2");
        check_gdn(w.decoder[j].igdn, r.deconv2.out, tag + " igdn");
    }
    check_conv(w.final_conv, ref.final_conv.in, 1, T, false, "final conv");
    bool finite = true;
    for_each_tensor(w, [&](const float *p, std::size_t n) {
        finite = finite && Eigen::Map<const Eigen::ArrayXf>(p, static_cast<Eigen::Index>(n)).isFinite().all();
    });
    if (!finite) throw format_error("weights contain non-finite values");
}

Eigen::MatrixXf gdn(const Eigen::MatrixXf &x, const Eigen::VectorXf &beta, const rowmat_f &gamma) {
    const Eigen::MatrixXd xd = x.cast<double>();
    return (xd.array() / gdn_norm(xd, beta, gamma).array()).cast<float>();
}

Eigen::MatrixXf igdn(const Eigen::MatrixXf &x, const Eigen::VectorXf &beta, const rowmat_f &gamma) {
    const Eigen::MatrixXd xd = x.cast<double>();
    return (xd.array() * gdn_norm(xd, beta, gamma).array()).cast<float>();
}

FeatureMap conv(const FeatureMap &x, const ConvLayer &layer, std::size_t stride) {
    if (x.channels() != layer.in) throw usage_error("conv: channel mismatch");
    if (stride == 2 && x.edge % 2 != 0) throw usage_error("conv: stride-2 input must have even extent");
    const auto &taps = taps_for(x.dims);
    const auto T = taps.size();
    const auto in = space(x.dims, x.edge);
    const auto out = space(x.dims, stride == 1 ? x.edge : x.edge / 2);
    const long s = static_cast<long>(stride);

    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layer.in * T), static_cast<Eigen::Index>(out.sites()));
    for (std::size_t oz = 0; oz < out.nz; ++oz)
        for (std::size_t oy = 0; oy < out.n; ++oy)
            for (std::size_t ox = 0; ox < out.n; ++ox) {
                const auto o = static_cast<Eigen::Index>(out.index(oz, oy, ox));
                for (std::size_t t = 0; t < T; ++t) {
                    const long iz = static_cast<long>(oz) * s + taps[t].dz;
                    const long iy = static_cast<long>(oy) * s + taps[t].dy;
                    const long ix = static_cast<long>(ox) * s + taps[t].dx;
                    if (!in.inside(iz, iy, ix)) continue;
                    const auto i = static_cast<Eigen::Index>(in.index(iz, iy, ix));
                    for (std::size_t c = 0; c < layer.in; ++c)
                        cols(static_cast<Eigen::Index>(c * T + t), o) = x.data(static_cast<Eigen::Index>(c), i);
                }
            }
    Eigen::MatrixXd y = layer.kernel.cast<double>() * cols;
    y.colwise() += layer.bias.cast<double>();
    return {x.dims, out.n, y.cast<float>()};
}

FeatureMap deconv(const FeatureMap &x, const ConvLayer &layer, std::size_t stride) {
    if (x.channels() != layer.in) throw usage_error("deconv: channel mismatch");
    const auto &taps = taps_for(x.dims);
    const auto T = taps.size();
    const auto in = space(x.dims, x.edge);
    const auto out = space(x.dims, x.edge * stride);
    const long s = static_cast<long>(stride);

    // Per input site, the contribution to every (out channel, tap) pair.
    const Eigen::MatrixXd contrib = layer.kernel.cast<double>().transpose() * x.data.cast<double>();
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layer.out), static_cast<Eigen::Index>(out.sites()));
    for (std::size_t iz = 0; iz < in.nz; ++iz)
        for (std::size_t iy = 0; iy < in.n; ++iy)
            for (std::size_t ix = 0; ix < in.n; ++ix) {
                const auto i = static_cast<Eigen::Index>(in.index(iz, iy, ix));
                for (std::size_t t = 0; t < T; ++t) {
                    const long oz = static_cast<long>(iz) * s + taps[t].dz;
                    const long oy = static_cast<long>(iy) * s + taps[t].dy;
                    const long ox = static_cast<long>(ix) * s + taps[t].dx;
                    if (!out.inside(oz, oy, ox)) continue;
                    const auto o = static_cast<Eigen::Index>(out.index(oz, oy, ox));
                    for (std::size_t c = 0; c < layer.out; ++c)
                        y(static_cast<Eigen::Index>(c), o) += contrib(static_cast<Eigen::Index>(c * T + t), i);
                }
            }
    y.colwise() += layer.bias.cast<double>();
    return {x.dims, out.n, y.cast<float>()};
}

Eigen::VectorXf encoder_forward(std::span<const float> block, const NetworkConfig &cfg, const WeightSet &w) {
    if (block.size() != cfg.block_points()) throw usage_error("encoder: input must be a complete block");
    FeatureMap x{cfg.dimensionality, cfg.block_edge,
                 Eigen::Map<const Eigen::RowVectorXf>(block.data(), static_cast<Eigen::Index>(block.size()))};
    for (const auto &stage: w.encoder) {
        x = conv(x, stage.conv1, 1);
        x = conv(x, stage.conv2, 2);
        x.data = gdn(x.data, stage.gdn.beta, stage.gdn.gamma);
    }
    // Channel-major flattening: index c * sites + s.
    rowmat_f flat_rows = x.data;
    const Eigen::Map<const Eigen::VectorXf> flat(flat_rows.data(), flat_rows.size());
    Eigen::VectorXd z = w.encoder_fc.weight.cast<double>() * flat.cast<double>();
    z += w.encoder_fc.bias.cast<double>();
    return z.cast<float>();
}

Eigen::VectorXf decoder_forward(const Eigen::VectorXf &latent, const NetworkConfig &cfg, const WeightSet &w) {
    if (static_cast<std::size_t>(latent.size()) != cfg.latent_size) throw usage_error("decoder: latent length mismatch");
    Eigen::VectorXd f = w.decoder_fc.weight.cast<double>() * latent.cast<double>();
    f += w.decoder_fc.bias.cast<double>();
    const Eigen::VectorXf ff = f.cast<float>();
    FeatureMap x{cfg.dimensionality, cfg.bottom_edge(),
                 Eigen::Map<const rowmat_f>(ff.data(), static_cast<Eigen::Index>(cfg.channels.back()),
                                            static_cast<Eigen::Index>(cfg.bottom_sites()))};
    for (const auto &stage: w.decoder) {
        x = deconv(x, stage.deconv1, 1);
        x = deconv(x, stage.deconv2, 2);
        x.data = igdn(x.data, stage.igdn.beta, stage.igdn.gamma);
    }
    x = conv(x, w.final_conv, 1);
    return x.data.row(0).transpose().cwiseMax(-1.0f).cwiseMin(1.0f);
}

bytes serialize_weights(const NetworkConfig &cfg, const WeightSet &w) {
    validate_weights(cfg, w);
    byte_writer out;
    out.put_magic(weight_magic);
    out.put<std::uint16_t>(weight_version);
    out.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.dimensionality));
    out.put<std::uint16_t>(static_cast<std::uint16_t>(cfg.block_edge));
    out.put<std::uint16_t>(static_cast<std::uint16_t>(cfg.latent_size));
    out.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.num_blocks()));
    for (auto c: cfg.channels) out.put<std::uint16_t>(static_cast<std::uint16_t>(c));
    for_each_tensor(w, [&](const float *p, std::size_t n) {
        out.put<std::uint64_t>(n);
        out.put_array<float>({p, n});
    });
    return out.take();
}

std::pair<NetworkConfig, WeightSet> parse_weights(std::span<const std::uint8_t> data) {
    byte_reader in(data);
    in.expect_magic(weight_magic);
    if (in.get<std::uint16_t>() != weight_version) throw format_error("unsupported weight file version");
    NetworkConfig cfg;
    cfg.dimensionality = in.get<std::uint8_t>();
    cfg.block_edge = in.get<std::uint16_t>();
    cfg.latent_size = in.get<std::uint16_t>();
    const auto n = in.get<std::uint8_t>();
    for (unsigned k = 0; k < n; ++k) cfg.channels.push_back(in.get<std::uint16_t>());
    try {
        cfg.validate();
    } catch (const usage_error &e) {
        throw format_error(std::string("weight file: ") + e.what());
    }
    auto w = make_weight_shapes(cfg);
    for_each_tensor(w, [&](float *p, std::size_t count) {
        if (in.get<std::uint64_t>() != count) throw format_error("weight shape mismatch: tensor element count");
        auto values = in.get_array<float>(count);
        std::copy(values.begin(), values.end(), p);
    });
    if (!in.exhausted()) throw format_error("weight file has trailing bytes");
    validate_weights(cfg, w);
    return {std::move(cfg), std::move(w)};
}

std::pair<NetworkConfig, WeightSet> load_weights(const std::string &path) { return parse_weights(read_file(path)); }

void save_weights(const std::string &path, const NetworkConfig &cfg, const WeightSet &w) {
    write_file(path, serialize_weights(cfg, w));
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b: data) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

Autoencoder::Autoencoder(NetworkConfig cfg, WeightSet w)
    : cfg_(std::move(cfg)), w_(std::move(w)), digest_(fnv1a64(serialize_weights(cfg_, w_))) {}

Autoencoder Autoencoder::load(const std::string &path) {
    auto [cfg, w] = load_weights(path);
    return Autoencoder(std::move(cfg), std::move(w));
}

}  // namespace aesz
