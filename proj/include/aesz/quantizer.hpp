#ifndef AESZ_QUANTIZER_HPP
#define AESZ_QUANTIZER_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "aesz/core.hpp"

namespace aesz {

/// Linear-scale quantizer: residuals map to integer bins 2e wide, offset by
/// R/2. Code 0 is reserved for unpredictable points.
struct QuantizerConfig {
    static constexpr std::uint32_t sentinel = 0;
    static constexpr std::uint32_t default_alphabet = 65536;

    double e = 0;
    std::uint32_t alphabet = default_alphabet;

    QuantizerConfig() = default;
    QuantizerConfig(double bound, std::uint32_t r = default_alphabet) : e(bound), alphabet(r) { validate(); }

    std::int64_t radius() const { return alphabet / 2; }

    void validate() const {
        if (!(e > 0) || !std::isfinite(e)) throw usage_error("quantizer bound must be positive and finite");
        if (alphabet < 4 || alphabet % 2 != 0) throw usage_error("quantizer alphabet must be even and >= 4");
    }
};

template<class T>
struct Quantized {
    std::uint32_t code;
    T reconstructed;  // equals the input verbatim when unpredictable

    bool predictable() const { return code != QuantizerConfig::sentinel; }
};

namespace detail {

template<class T>
inline T reconstruct(T pred, std::int64_t m, double e) {
    return static_cast<T>(static_cast<double>(pred) + 2.0 * e * static_cast<double>(m));
}

}  // namespace detail

template<class T>
Quantized<T> quantize(T d, T pred, const QuantizerConfig &q) {
    const double diff = static_cast<double>(d) - static_cast<double>(pred);
    const double m = std::round(diff / (2.0 * q.e));  // half away from zero
    const double r = static_cast<double>(q.radius());
    if (!(m > -r && m < r)) return {QuantizerConfig::sentinel, d};
    const auto mi = static_cast<std::int64_t>(m);
    const T rec = detail::reconstruct(pred, mi, q.e);
    // Rounding to T can push a boundary point just outside the bound.
    if (!(std::fabs(static_cast<double>(d) - static_cast<double>(rec)) <= q.e)) return {QuantizerConfig::sentinel, d};
    return {static_cast<std::uint32_t>(mi + q.radius()), rec};
}

template<class T>
T dequantize(std::uint32_t code, T pred, const QuantizerConfig &q) {
    if (code == QuantizerConfig::sentinel || code >= q.alphabet) throw format_error("dequantize: code out of range");
    return detail::reconstruct(pred, static_cast<std::int64_t>(code) - q.radius(), q.e);
}

/// Sequential reader over a stream of verbatim unpredictable values.
template<class T>
class unpredictable_cursor {
public:
    explicit unpredictable_cursor(std::span<const T> values) : values_(values) {}

    T next() {
        if (pos_ >= values_.size()) throw format_error("unpredictable value list exhausted");
        return values_[pos_++];
    }

    std::size_t consumed() const { return pos_; }
    bool exhausted() const { return pos_ == values_.size(); }

private:
    std::span<const T> values_;
    std::size_t pos_ = 0;
};

/// Quantizer used when the requested bound is zero (constant fields): every
/// nonzero residual overflows and is kept verbatim.
inline QuantizerConfig lossless_quantizer() { return QuantizerConfig(std::numeric_limits<double>::min()); }

}  // namespace aesz

#endif
