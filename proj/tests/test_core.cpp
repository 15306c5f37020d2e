#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "aesz/core.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace aesz;
using namespace aesz::testing;

TEST_CASE("field validates shape and values") {
    CHECK_THROWS_AS(Field<float>(extents{}, array_t<float>()), usage_error);
    CHECK_THROWS_AS(Field<float>(extents{2, 2, 2, 2}, array_t<float>::Zero(16)), usage_error);
    CHECK_THROWS_AS(Field<float>(extents{3, 0}, array_t<float>()), usage_error);
    CHECK_THROWS_AS(Field<float>(extents{3, 3}, array_t<float>::Zero(8)), usage_error);
    array_t<double> v = array_t<double>::Zero(4);
    v[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Field<double>(extents{4}, v), usage_error);

    array_t<float> w(4);
    w << 3, -1, 7, 2;
    Field<float> f({2, 2}, w);
    CHECK(f.vmin() == -1);
    CHECK(f.vmax() == 7);
    CHECK(f.value_range() == 8);
    CHECK(f.rank() == 2);
}

TEST_CASE("block counts of a 100x500x500 field with S=8") {
    BlockGrid grid({100, 500, 500}, 8);
    CHECK(grid.counts() == extents{13, 63, 63});
    CHECK(grid.block_count() == 13u * 63u * 63u);
    // the last block on every axis has extent 4
    const auto last = grid.origin(grid.block_count() - 1);
    CHECK(last == extents{96, 496, 496});
    CHECK(grid.extent_at(last) == extents{4, 4, 4});
    CHECK_FALSE(grid.complete(grid.extent_at(last)));
    CHECK(grid.complete(grid.extent_at(grid.origin(0))));
}

TEST_CASE("single 1D field shorter than a block") {
    BlockGrid grid({5}, 8);
    CHECK(grid.block_count() == 1);
    CHECK(grid.extent_at(grid.origin(0)) == extents{5});
    CHECK_THROWS_AS(BlockGrid({5}, 1), usage_error);
}

TEST_CASE("block counts agree with point assignment") {
    for (const extents &dims: {extents{17}, extents{9, 23}, extents{7, 16, 5}, extents{33, 32}})
        for (std::size_t edge: {2u, 3u, 8u, 16u}) {
            CAPTURE(edge);
            CHECK(BlockGrid(dims, edge).block_count() == count_blocks_by_points(dims, edge));
        }
}

TEST_CASE("split then assemble reproduces the field") {
    std::mt19937_64 rng(11);
    for (const extents &dims: {extents{37}, extents{19, 45}, extents{9, 17, 12}}) {
        std::uniform_real_distribution<double> u(-5, 5);
        array_t<double> v(static_cast<Eigen::Index>(product(dims)));
        for (auto &x: v) x = u(rng);
        Field<double> f(dims, v);
        for (std::size_t edge: {2u, 4u, 8u}) {
            auto blocks = split_blocks(f, edge);
            std::size_t total = 0;
            for (const auto &b: blocks) total += b.size();
            CHECK(total == f.size());
            auto g = assemble_blocks(dims, edge, blocks);
            CHECK((g.values() == f.values()).all());
        }
    }
}

TEST_CASE("block extraction reads the right points") {
    auto f = tabulate<double>({6, 7}, [](const auto &x) { return 100 * x[0] * 6 + x[1] * 7; });
    BlockGrid grid(f.dims(), 4);
    auto b = grid.extract(f.span(), 3);  // origin (4,4), extent (2,3)
    CHECK(b.origin == extents{4, 4});
    CHECK(b.extent == extents{2, 3});
    CHECK(b.data[0] == doctest::Approx(404));
    CHECK(b.data[5] == doctest::Approx(506));
}

TEST_CASE("normalization maps the value range onto [-1, 1]") {
    CHECK(normalize_value(0.0, -2.0, 5.0) == doctest::Approx(2.0 * 2.0 / 7.0 - 1.0));
    CHECK(normalize_value(-2.0, -2.0, 5.0) == -1.0);
    CHECK(normalize_value(5.0, -2.0, 5.0) == 1.0);
    CHECK(normalize_value(0.0, -3.06, 2.64) == doctest::Approx(0.0737).epsilon(1e-3));
    CHECK(normalize_value(3.0, -4.6, 11.0) == doctest::Approx(-0.0256410).epsilon(1e-6));
    for (double x: {-4.6, 0.0, 3.3, 11.0}) CHECK(denormalize_value(normalize_value(x, -4.6, 11.0), -4.6, 11.0) == doctest::Approx(x));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int t = 0; t < 10000; ++t) {
        double lo = u(rng), hi = u(rng), x = u(rng);
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) continue;
        const double back = denormalize_value(normalize_value(x, lo, hi), lo, hi);
        // a few ulps of the largest magnitude involved
        const double scale = std::max({std::fabs(lo), std::fabs(hi), std::fabs(x)});
        REQUIRE(std::fabs(back - x) <= 8 * std::numeric_limits<double>::epsilon() * scale);
    }

    Block<float> b{{0}, {3}, array_t<float>::Constant(3, 1.0f), true};
    CHECK_THROWS_AS(normalize_block(b, 1.0f, 1.0f), usage_error);
}

TEST_CASE("ingest checks the file size against dims") {
    const auto path = (std::filesystem::temp_directory_path() / "aesz_core_ingest.bin").string();
    auto f = gaussian_mixture<float>({12, 10}, 3);
    write_field(path, f);
    auto g = ingest_field<float>(path, {12, 10});
    CHECK((g.values() == f.values()).all());
    CHECK_THROWS_AS(ingest_field<float>(path, {12, 11}), usage_error);
    CHECK_THROWS_AS(ingest_field<double>(path, {12, 10}), usage_error);
    CHECK_THROWS_AS(ingest_field<float>(path, {}), usage_error);
    CHECK_THROWS_AS(ingest_field<float>(path + ".missing", {12, 10}), io_error);
    std::filesystem::remove(path);
}

TEST_CASE("error bound constructors") {
    auto r = ErrorBound::relative(1e-3, 250.0);
    CHECK(r.abs == doctest::Approx(0.25));
    auto a = ErrorBound::absolute(0.5, 100.0);
    CHECK(a.epsilon == doctest::Approx(5e-3));
    CHECK_THROWS_AS(ErrorBound::relative(0, 1), usage_error);
    CHECK_THROWS_AS(ErrorBound::absolute(-1, 1), usage_error);
}
