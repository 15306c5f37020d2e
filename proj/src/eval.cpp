#include "aesz/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "aesz/parallel.hpp"

namespace aesz {

namespace {

std::string fmt(const char *spec, double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

template<class T>
RateDistortionPoint evaluate_point(const Field<T> &field, double epsilon, const BlockModel *model, const SweepOptions &options) {
    RateDistortionPoint p;
    p.epsilon = epsilon;
    CompressReport<T> report;
    const auto bound = ErrorBound::relative(epsilon, field.value_range());

    auto t0 = std::chrono::steady_clock::now();
    const auto container = compress(field, bound, model, options.compress, &report);
    const double tc = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto rec = decompress<T>(container, model, {options.compress.threads});
    const double td = seconds_since(t0);

    const double bits = 8.0 * static_cast<double>(container.size());
    p.bit_rate = bits / static_cast<double>(field.size());
    p.cr = static_cast<double>(sizeof(T) * 8) / p.bit_rate;
    p.psnr = psnr(field, rec);
    p.max_abs_err = max_abs_error(field, rec);
    p.ae_block_fraction = report.ae_fraction();
    if (options.timing) {
        p.compress_seconds = tc;
        p.decompress_seconds = td;
    }
    return p;
}

template<class T>
std::vector<RateDistortionPoint> sweep(const Field<T> &field, const std::vector<double> &epsilons, const BlockModel *model,
                                       const SweepOptions &options) {
    for (double e: epsilons)
        if (!(e > 0)) throw usage_error("sweep: error bounds must be positive");
    std::vector<RateDistortionPoint> points(epsilons.size());
    const unsigned workers = options.timing ? 1u : options.threads;
    parallel_for(epsilons.size(), workers, [&](std::size_t i) { points[i] = evaluate_point(field, epsilons[i], model, options); });
    return points;
}

template<class T>
std::vector<std::pair<double, double>> ae_fraction_profile(const Field<T> &field, const std::vector<double> &epsilons,
                                                           const BlockModel *model, const CompressOptions &options) {
    std::vector<std::pair<double, double>> out;
    for (double e: epsilons) {
        CompressReport<T> report;
        compress(field, ErrorBound::relative(e, field.value_range()), model, options, &report);
        out.emplace_back(e, report.ae_fraction());
    }
    return out;
}

std::string format_csv(const std::vector<RateDistortionPoint> &points) {
    std::string s = "epsilon,bit_rate,psnr,cr,max_abs_err,compress_seconds,decompress_seconds,ae_block_fraction\n";
    for (const auto &p: points) {
        s += fmt("%.6g", p.epsilon) + ',' + fmt("%.9g", p.bit_rate) + ',' + fmt("%.6f", p.psnr) + ',' + fmt("%.9g", p.cr) + ',' +
             fmt("%.9g", p.max_abs_err) + ',' + fmt("%.6f", p.compress_seconds) + ',' + fmt("%.6f", p.decompress_seconds) + ',' +
             fmt("%.6f", p.ae_block_fraction) + '\n';
    }
    return s;
}

std::string format_fraction_csv(const std::vector<std::pair<double, double>> &profile) {
    std::string s = "epsilon,ae_block_fraction\n";
    for (const auto &[e, f]: profile) s += fmt("%.6g", e) + ',' + fmt("%.6f", f) + '\n';
    return s;
}

#define AESZ_INSTANTIATE(T)                                                                                                   \
    template RateDistortionPoint evaluate_point<T>(const Field<T> &, double, const BlockModel *, const SweepOptions &);       \
    template std::vector<RateDistortionPoint> sweep<T>(const Field<T> &, const std::vector<double> &, const BlockModel *,     \
                                                       const SweepOptions &);                                                 \
    template std::vector<std::pair<double, double>> ae_fraction_profile<T>(const Field<T> &, const std::vector<double> &,     \
                                                                           const BlockModel *, const CompressOptions &);

AESZ_INSTANTIATE(float)
AESZ_INSTANTIATE(double)

#undef AESZ_INSTANTIATE

}  // namespace aesz
