#ifndef AESZ_AE_MODEL_HPP
#define AESZ_AE_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aesz/byte_io.hpp"

namespace aesz {

using rowmat_f = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using rowmat_d = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Architecture of the blockwise convolutional autoencoder. Each stage halves
/// every spatial axis; kernels are 3 wide on every axis.
struct NetworkConfig {
    static constexpr std::size_t kernel = 3;

    int dimensionality = 2;       // 2 or 3
    std::size_t block_edge = 32;  // S
    std::size_t latent_size = 16; // d
    std::vector<std::size_t> channels;

    std::size_t num_blocks() const { return channels.size(); }
    std::size_t taps() const { return dimensionality == 2 ? kernel * kernel : kernel * kernel * kernel; }
    std::size_t block_points() const;
    std::size_t bottom_edge() const { return block_edge >> num_blocks(); }
    std::size_t bottom_sites() const;
    std::size_t flat_size() const { return channels.back() * bottom_sites(); }
    /// Spatial edge after each encoder stage, starting with S.
    std::vector<std::size_t> encoder_trace() const;
    void validate() const;

    bool operator==(const NetworkConfig &) const = default;
};

struct ConvLayer {
    std::size_t in = 0, out = 0;
    rowmat_f kernel;      // conv: out x (in * taps); deconv: in x (out * taps)
    Eigen::VectorXf bias; // out
};

struct GdnParams {
    Eigen::VectorXf beta;  // > 0
    rowmat_f gamma;        // >= 0, channels x channels
};

struct DenseLayer {
    rowmat_f weight;  // out x in
    Eigen::VectorXf bias;
};

struct EncoderStage {
    ConvLayer conv1;  // stride 1
    ConvLayer conv2;  // stride 2
    GdnParams gdn;
};

struct DecoderStage {
    ConvLayer deconv1;  // stride 1
    ConvLayer deconv2;  // stride 2
    GdnParams igdn;
};

/// Learned parameters. `decoder` is stored in application order, i.e. the
/// first entry operates at the smallest spatial scale.
struct WeightSet {
    std::vector<EncoderStage> encoder;
    DenseLayer encoder_fc;
    DenseLayer decoder_fc;
    std::vector<DecoderStage> decoder;
    ConvLayer final_conv;
};

/// Zero-filled parameters with every shape implied by `cfg` (beta = 1).
WeightSet make_weight_shapes(const NetworkConfig &cfg);

/// Throws format_error when a tensor shape disagrees with `cfg` or the GDN
/// parameters violate beta > 0, gamma >= 0.
void validate_weights(const NetworkConfig &cfg, const WeightSet &w);

/// Feature map: channels x sites, sites in row-major spatial order.
struct FeatureMap {
    int dims = 2;
    std::size_t edge = 0;
    Eigen::MatrixXf data;

    std::size_t channels() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t sites() const { return static_cast<std::size_t>(data.cols()); }
};

/// y_c = x_c / sqrt(beta_c + sum_k gamma_ck x_k^2) at every site.
Eigen::MatrixXf gdn(const Eigen::MatrixXf &x, const Eigen::VectorXf &beta, const rowmat_f &gamma);
/// y_c = x_c * sqrt(beta_c + sum_k gamma_ck x_k^2) at every site.
Eigen::MatrixXf igdn(const Eigen::MatrixXf &x, const Eigen::VectorXf &beta, const rowmat_f &gamma);

/// Zero-padded 3-wide convolution, stride 1 (same size) or 2 (halved).
FeatureMap conv(const FeatureMap &x, const ConvLayer &layer, std::size_t stride);
/// Transposed 3-wide convolution, stride 1 (same size) or 2 (doubled).
FeatureMap deconv(const FeatureMap &x, const ConvLayer &layer, std::size_t stride);

/// Block (normalized to [-1, 1], S^dim values, row-major) to latent vector.
Eigen::VectorXf encoder_forward(std::span<const float> block, const NetworkConfig &cfg, const WeightSet &w);
/// Latent vector to predicted block in [-1, 1].
Eigen::VectorXf decoder_forward(const Eigen::VectorXf &latent, const NetworkConfig &cfg, const WeightSet &w);

bytes serialize_weights(const NetworkConfig &cfg, const WeightSet &w);
std::pair<NetworkConfig, WeightSet> parse_weights(std::span<const std::uint8_t> data);
std::pair<NetworkConfig, WeightSet> load_weights(const std::string &path);
void save_weights(const std::string &path, const NetworkConfig &cfg, const WeightSet &w);

std::uint64_t fnv1a64(std::span<const std::uint8_t> data);

/// Anything that maps normalized blocks to latents and back. The pipeline
/// only sees this interface, so tests can substitute their own predictors.
class BlockModel {
public:
    virtual ~BlockModel() = default;
    virtual int dimensionality() const = 0;
    virtual std::size_t block_edge() const = 0;
    virtual std::size_t latent_size() const = 0;
    /// Identifies the parameters; stored in containers and checked on decode.
    virtual std::uint64_t digest() const = 0;
    virtual Eigen::VectorXf encode(std::span<const float> block) const = 0;
    virtual Eigen::VectorXf decode(const Eigen::VectorXf &latent) const = 0;
};

class Autoencoder final : public BlockModel {
public:
    Autoencoder(NetworkConfig cfg, WeightSet w);
    static Autoencoder load(const std::string &path);

    const NetworkConfig &config() const { return cfg_; }
    const WeightSet &weights() const { return w_; }

    int dimensionality() const override { return cfg_.dimensionality; }
    std::size_t block_edge() const override { return cfg_.block_edge; }
    std::size_t latent_size() const override { return cfg_.latent_size; }
    std::uint64_t digest() const override { return digest_; }
    Eigen::VectorXf encode(std::span<const float> block) const override { return encoder_forward(block, cfg_, w_); }
    Eigen::VectorXf decode(const Eigen::VectorXf &latent) const override { return decoder_forward(latent, cfg_, w_); }

private:
    NetworkConfig cfg_;
    WeightSet w_;
    std::uint64_t digest_;
};

}  // namespace aesz

#endif
