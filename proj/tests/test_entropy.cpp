#include <random>

#include "doctest.h"

#include "aesz/entropy.hpp"
#include "support/oracles.hpp"

using namespace aesz;
using namespace aesz::testing;

namespace {

constexpr std::uint32_t R = 65536;

// u32 count + (u32 symbol, u8 length) per entry + u64 bit length
std::size_t table_bytes(const bytes &stream) {
    std::uint32_t n;
    std::memcpy(&n, stream.data(), 4);
    return 4 + 5 * std::size_t{n} + 8;
}

std::vector<std::uint32_t> random_codes(std::size_t n, std::uint32_t lo, std::uint32_t hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> u(lo, hi);
    std::vector<std::uint32_t> v(n);
    for (auto &x: v) x = u(rng);
    return v;
}

}  // namespace

TEST_CASE("single distinct symbol gets a one-bit code") {
    std::vector<std::uint32_t> codes(1000, 32768u);
    auto s = huffman_encode(codes, R);
    CHECK(s.size() - table_bytes(s) <= 125);
    CHECK(table_bytes(s) == 4 + 5 + 8);
    CHECK(huffman_decode(s) == codes);
}

TEST_CASE("two equiprobable symbols cost exactly one bit each") {
    for (std::size_t n: {1u, 7u, 8u, 1000u, 12345u}) {
        std::vector<std::uint32_t> codes(n);
        for (std::size_t i = 0; i < n; ++i) codes[i] = i % 2 ? 5u : 9u;
        if (n == 1) codes[0] = 5;
        auto s = huffman_encode(codes, R);
        CHECK(s.size() - table_bytes(s) == (n + 7) / 8);
        CHECK(huffman_decode(s) == codes);
    }
}

TEST_CASE("uniform bytes cost within 1% of the empirical entropy") {
    auto codes = random_codes(200000, 0, 255, 17);
    auto s = huffman_encode(codes, R);
    const double bits = 8.0 * static_cast<double>(s.size() - table_bytes(s));
    const double h = empirical_entropy(codes) * static_cast<double>(codes.size());
    CHECK(bits <= 1.01 * h);
    CHECK(bits >= h - 8);
}

TEST_CASE("geometric-like distribution stays close to entropy") {
    std::mt19937_64 rng(4);
    std::geometric_distribution<int> g(0.3);
    std::vector<std::uint32_t> codes(100000);
    for (auto &c: codes) c = 32768u + static_cast<std::uint32_t>(std::min(g(rng), 1000));
    auto s = huffman_encode(codes, R);
    const double bits = 8.0 * static_cast<double>(s.size() - table_bytes(s));
    const double h = empirical_entropy(codes) * static_cast<double>(codes.size());
    CHECK(bits >= h - 8);
    CHECK(bits <= h + static_cast<double>(codes.size()));  // Huffman redundancy is below one bit per symbol
    CHECK(huffman_decode(s) == codes);
}

TEST_CASE("round trip on a million random codes") {
    auto codes = random_codes(1000000, 0, R - 1, 23);
    auto s = huffman_encode(codes, R);
    CHECK(huffman_decode(s) == codes);
    // never worse than raw 16-bit packing beyond the table and 1%
    CHECK(static_cast<double>(s.size() - table_bytes(s)) <= 1.01 * 2.0 * static_cast<double>(codes.size()));
}

TEST_CASE("random lengths round trip") {
    std::mt19937_64 rng(99);
    for (std::size_t n: {0u, 1u, 2u, 3u, 100u, 4097u, 65536u}) {
        std::uniform_int_distribution<std::uint32_t> width(1, 16);
        auto codes = random_codes(n, 0, (1u << width(rng)) - 1, n + 1);
        CHECK(huffman_decode(huffman_encode(codes, R)) == codes);
    }
}

TEST_CASE("empty stream decodes to nothing") {
    auto s = huffman_encode({}, R);
    CHECK(s.size() == table_bytes(s));
    CHECK(huffman_decode(s).empty());
}

TEST_CASE("symbols outside the alphabet are rejected") {
    std::vector<std::uint32_t> codes{1, 2, 70000};
    CHECK_THROWS_AS(huffman_encode(codes, R), usage_error);
}

TEST_CASE("corrupted streams raise errors") {
    auto codes = random_codes(5000, 30000, 30100, 8);
    auto s = huffman_encode(codes, R);

    SUBCASE("length that breaks the prefix code") {
        auto bad = s;
        bad[4 + 4] = static_cast<std::uint8_t>(bad[4 + 4] + 1);  // first entry's code length
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
    SUBCASE("zero length") {
        auto bad = s;
        bad[4 + 4] = 0;
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
    SUBCASE("symbols out of order") {
        auto bad = s;
        std::swap_ranges(bad.begin() + 4, bad.begin() + 8, bad.begin() + 9);
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
    SUBCASE("absurd symbol count") {
        auto bad = s;
        bad[3] = 0x7f;
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
    SUBCASE("truncated payload") {
        auto bad = s;
        bad.resize(bad.size() - 3);
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
    SUBCASE("trailing garbage") {
        auto bad = s;
        bad.push_back(0);
        CHECK_THROWS_AS(huffman_decode(bad), format_error);
    }
}

TEST_CASE("frequencies to code lengths") {
    std::vector<std::uint64_t> freq{0, 5, 0, 0};
    auto t = HuffmanTable::from_frequencies(freq);
    REQUIRE(t.entries.size() == 1);
    CHECK(t.entries[0].symbol == 1);
    CHECK(t.entries[0].length == 1);

    std::vector<std::uint64_t> f2{1, 1, 2, 4};
    auto t2 = HuffmanTable::from_frequencies(f2);
    REQUIRE(t2.entries.size() == 4);
    CHECK(t2.entries[0].length == 3);
    CHECK(t2.entries[1].length == 3);
    CHECK(t2.entries[2].length == 2);
    CHECK(t2.entries[3].length == 1);
}

TEST_CASE("backend compresses zeros and bounds random overhead") {
    bytes zeros(1 << 20, 0);
    auto z = backend_encode(zeros);
    CHECK(z.size() <= zeros.size() / 100);
    CHECK(backend_decode(z) == zeros);

    std::mt19937_64 rng(77);
    bytes noise(1 << 20);
    for (auto &b: noise) b = static_cast<std::uint8_t>(rng());
    auto n = backend_encode(noise);
    CHECK(n.size() <= noise.size() * 101 / 100);
    CHECK(backend_decode(n) == noise);
}

TEST_CASE("backend round trips and rejects damage") {
    std::mt19937_64 rng(2);
    for (std::size_t n: {0u, 1u, 100u, 65537u}) {
        bytes data(n);
        for (auto &b: data) b = static_cast<std::uint8_t>(rng() % 7);
        CHECK(backend_decode(backend_encode(data)) == data);
    }
    bytes data(5000, 3);
    auto enc = backend_encode(data);
    auto bad = enc;
    bad.resize(bad.size() - 4);
    CHECK_THROWS_AS(backend_decode(bad), format_error);
    bad = enc;
    bad[0] ^= 1;  // declared length
    CHECK_THROWS_AS(backend_decode(bad), format_error);
    CHECK_THROWS_AS(backend_decode(bytes{1, 2}), format_error);
}
