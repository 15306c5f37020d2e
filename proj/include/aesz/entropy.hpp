#ifndef AESZ_ENTROPY_HPP
#define AESZ_ENTROPY_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "aesz/byte_io.hpp"

namespace aesz {

/// Canonical Huffman code described by per-symbol code lengths.
struct HuffmanTable {
    struct entry {
        std::uint32_t symbol;
        std::uint8_t length;
    };
    std::vector<entry> entries;  // sorted by symbol, only symbols that occur

    static HuffmanTable from_frequencies(std::span<const std::uint64_t> freq);
};

/// Self-describing stream: u32 symbol count, (u32 symbol, u8 length) per
/// present symbol, u64 bit length, payload padded to a byte boundary.
bytes huffman_encode(std::span<const std::uint32_t> codes, std::uint32_t alphabet);

std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> stream);
std::vector<std::uint32_t> huffman_decode(byte_reader &in);

/// General-purpose lossless stage (deflate): u64 raw length + zlib stream.
bytes backend_encode(std::span<const std::uint8_t> data);
bytes backend_decode(std::span<const std::uint8_t> data);

}  // namespace aesz

#endif
