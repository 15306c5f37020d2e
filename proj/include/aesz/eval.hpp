#ifndef AESZ_EVAL_HPP
#define AESZ_EVAL_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "aesz/pipeline.hpp"

namespace aesz {

struct RateDistortionPoint {
    double epsilon = 0;
    double bit_rate = 0;  // container bits per point
    double psnr = 0;      // dB; +inf for a perfect reconstruction
    double cr = 0;
    double max_abs_err = 0;
    double compress_seconds = 0;
    double decompress_seconds = 0;
    double ae_block_fraction = 0;
};

template<class T>
double mean_squared_error(const Field<T> &original, const Field<T> &reconstructed) {
    if (original.dims() != reconstructed.dims()) throw usage_error("fields differ in shape");
    return (original.values().template cast<double>() - reconstructed.values().template cast<double>()).square().mean();
}

template<class T>
double max_abs_error(const Field<T> &original, const Field<T> &reconstructed) {
    if (original.dims() != reconstructed.dims()) throw usage_error("fields differ in shape");
    return (original.values().template cast<double>() - reconstructed.values().template cast<double>()).abs().maxCoeff();
}

/// 20 log10(value range) - 10 log10(mse); +inf when the fields are identical.
template<class T>
double psnr(const Field<T> &original, const Field<T> &reconstructed) {
    const double mse = mean_squared_error(original, reconstructed);
    if (mse == 0) return std::numeric_limits<double>::infinity();
    const double range = original.value_range();
    if (!(range > 0)) throw usage_error("psnr: original field has no value range");
    return 20.0 * std::log10(range) - 10.0 * std::log10(mse);
}

struct SweepOptions {
    bool timing = true;  // when false, timing columns are 0 and points may run in parallel
    unsigned threads = 1;
    CompressOptions compress;
};

template<class T>
RateDistortionPoint evaluate_point(const Field<T> &field, double epsilon, const BlockModel *model, const SweepOptions &options);

template<class T>
std::vector<RateDistortionPoint> sweep(const Field<T> &field, const std::vector<double> &epsilons, const BlockModel *model,
                                       const SweepOptions &options = {});

/// (epsilon, share of AE-predicted blocks) per bound.
template<class T>
std::vector<std::pair<double, double>> ae_fraction_profile(const Field<T> &field, const std::vector<double> &epsilons,
                                                           const BlockModel *model, const CompressOptions &options = {});

std::string format_csv(const std::vector<RateDistortionPoint> &points);
std::string format_fraction_csv(const std::vector<std::pair<double, double>> &profile);

}  // namespace aesz

#endif
