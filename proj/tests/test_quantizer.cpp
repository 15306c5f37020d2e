#include <cmath>
#include <random>

#include "doctest.h"

#include "aesz/quantizer.hpp"

using namespace aesz;

TEST_CASE("zero residual maps to the center code") {
    QuantizerConfig q(0.25);
    auto r = quantize(3.0, 3.0, q);
    CHECK(r.code == 32768u);
    CHECK(r.reconstructed == 3.0);
}

TEST_CASE("residual of 1.4e lands in bin 1") {
    const double e = 0.01;
    QuantizerConfig q(e);
    const double pred = 5.0, d = pred + 1.4 * e;
    auto r = quantize(d, pred, q);
    CHECK(r.code == 32769u);
    CHECK(std::fabs(d - r.reconstructed) == doctest::Approx(0.6 * e));
    CHECK(std::fabs(d - r.reconstructed) <= e);
}

TEST_CASE("out-of-range residuals become unpredictable") {
    const double e = 0.5;
    QuantizerConfig q(e);
    const double d = 2 * e * (q.radius());
    auto r = quantize(d, 0.0, q);
    CHECK_FALSE(r.predictable());
    CHECK(r.code == QuantizerConfig::sentinel);
    CHECK(r.reconstructed == d);
    CHECK_FALSE(quantize(-d, 0.0, q).predictable());
    CHECK(quantize(2 * e * (q.radius() - 1), 0.0, q).code == q.alphabet - 1);
    CHECK(quantize(-2 * e * (q.radius() - 1), 0.0, q).code == 1u);
}

TEST_CASE("dequantize examples") {
    QuantizerConfig q(0.5);
    CHECK(dequantize(32768u, 7.0, q) == 7.0);
    CHECK(dequantize(32769u, 7.0, q) == 8.0);
    CHECK(dequantize(1u, 0.0, q) == -1.0 * (q.radius() - 1));
    CHECK_THROWS_AS(dequantize(0u, 0.0, q), format_error);
    CHECK_THROWS_AS(dequantize(q.alphabet, 0.0, q), format_error);
}

TEST_CASE("ties round away from zero") {
    QuantizerConfig q(0.5);
    CHECK(quantize(0.5, 0.0, q).code == 32769u);
    CHECK(quantize(-0.5, 0.0, q).code == 32767u);
    CHECK(quantize(1.5, 0.0, q).code == 32770u);
}

TEST_CASE("configuration is validated") {
    CHECK_THROWS_AS(QuantizerConfig(0.0), usage_error);
    CHECK_THROWS_AS(QuantizerConfig(-1.0), usage_error);
    CHECK_THROWS_AS(QuantizerConfig(std::numeric_limits<double>::infinity()), usage_error);
    CHECK_THROWS_AS(QuantizerConfig(1.0, 3), usage_error);
    CHECK_THROWS_AS(QuantizerConfig(1.0, 2), usage_error);
    CHECK_NOTHROW(QuantizerConfig(1.0, 4));
}

TEST_CASE("small alphabets shrink the representable range") {
    QuantizerConfig q(1.0, 8);
    for (int m = -3; m <= 3; ++m) CHECK(quantize(2.0 * m, 0.0, q).code == static_cast<std::uint32_t>(m + 4));
    CHECK_FALSE(quantize(8.0, 0.0, q).predictable());
    CHECK_FALSE(quantize(-8.0, 0.0, q).predictable());
}

TEST_CASE_TEMPLATE("bound holds or the point is unpredictable across magnitudes", T, float, double) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> mant(-1, 1);
    std::uniform_int_distribution<int> expo(-6, 6);
    for (int t = 0; t < 200000; ++t) {
        const double scale = std::pow(10.0, expo(rng));
        const T d = static_cast<T>(mant(rng) * scale);
        const T pred = static_cast<T>(mant(rng) * scale);
        const double e = std::pow(10.0, expo(rng)) * std::fabs(mant(rng)) + 1e-30;
        QuantizerConfig q(e);
        auto r = quantize(d, pred, q);
        if (r.predictable()) {
            REQUIRE(std::fabs(static_cast<double>(d) - static_cast<double>(r.reconstructed)) <= e);
            REQUIRE(dequantize(r.code, pred, q) == r.reconstructed);
            // re-quantizing the reconstruction keeps the code
            REQUIRE(quantize(r.reconstructed, pred, q).code == r.code);
        } else {
            REQUIRE(r.reconstructed == d);
        }
    }
}

TEST_CASE("unpredictable cursor is sequential and bounded") {
    std::vector<float> v{1.5f, -2.0f};
    unpredictable_cursor<float> c(v);
    CHECK(c.next() == 1.5f);
    CHECK_FALSE(c.exhausted());
    CHECK(c.next() == -2.0f);
    CHECK(c.exhausted());
    CHECK(c.consumed() == 2);
    CHECK_THROWS_AS(c.next(), format_error);
}

TEST_CASE("lossless quantizer keeps every nonzero residual verbatim") {
    auto q = lossless_quantizer();
    CHECK(quantize(2.0, 2.0, q).code == 32768u);
    auto r = quantize(2.0, 1.0, q);
    CHECK_FALSE(r.predictable());
    CHECK(r.reconstructed == 2.0);
    auto s = quantize(1e-300, 0.0, q);
    CHECK_FALSE(s.predictable());
}
