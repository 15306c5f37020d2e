#ifndef AESZ_MODEL_INIT_HPP
#define AESZ_MODEL_INIT_HPP

#include <cstdint>

#include <Eigen/Core>

#include "aesz/ae_model.hpp"

namespace aesz {

/// Seeded random parameters (fan-in scaled normal kernels, beta = 1,
/// small non-negative gamma). Deterministic for a given seed and build.
WeightSet random_weights(const NetworkConfig &cfg, std::uint64_t seed);

/// Every kernel, bias and gamma zero; beta one. The decoder then predicts 0
/// (the midrange after denormalization) for any latent.
WeightSet zero_weights(const NetworkConfig &cfg);

/// True when every stage has room for a lossless space-to-depth
/// rearrangement, i.e. channels[k] >= 2^(dim*(k+1)).
bool supports_linear_fit(const NetworkConfig &cfg);

/// Least-squares optimal linear autoencoder for a set of normalized blocks
/// (one block per column, S^dim rows). The convolution stacks are set to
/// exact space-to-depth / depth-to-space rearrangements, GDN to identity,
/// and the dense layers to the top `latent_size` principal components.
WeightSet fit_linear_autoencoder(const NetworkConfig &cfg, const Eigen::MatrixXd &blocks);

}  // namespace aesz

#endif
