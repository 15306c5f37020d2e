#include "aesz/entropy.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include <zlib.h>

#include "aesz/core.hpp"

namespace aesz {

namespace {

constexpr unsigned max_code_length = 58;

struct canonical_code {
    std::vector<std::uint64_t> code;   // by table position
    std::vector<std::uint8_t> length;  // by table position
};

// Assigns canonical codewords in (length, symbol) order.
canonical_code assign_codes(const HuffmanTable &table, std::vector<std::size_t> &order) {
    const auto n = table.entries.size();
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return table.entries[a].length < table.entries[b].length;
    });
    canonical_code cc{std::vector<std::uint64_t>(n), std::vector<std::uint8_t>(n)};
    std::uint64_t code = 0;
    unsigned prev = 0;
    for (auto pos: order) {
        const unsigned len = table.entries[pos].length;
        code <<= (len - prev);
        cc.code[pos] = code;
        cc.length[pos] = static_cast<std::uint8_t>(len);
        ++code;
        prev = len;
    }
    return cc;
}

class bit_writer {
public:
    void put(std::uint64_t code, unsigned len) {
        for (unsigned b = len; b-- > 0;) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> b) & 1u));
            if (++fill_ == 8) {
                out_.push_back(acc_);
                acc_ = 0;
                fill_ = 0;
            }
        }
        bits_ += len;
    }

    bytes finish() {
        if (fill_) out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
        fill_ = 0;
        return std::move(out_);
    }

    std::uint64_t bits() const { return bits_; }

private:
    bytes out_;
    std::uint8_t acc_ = 0;
    unsigned fill_ = 0;
    std::uint64_t bits_ = 0;
};

}  // namespace

HuffmanTable HuffmanTable::from_frequencies(std::span<const std::uint64_t> freq) {
    HuffmanTable table;
    for (std::size_t s = 0; s < freq.size(); ++s)
        if (freq[s]) table.entries.push_back({static_cast<std::uint32_t>(s), 0});
    const auto n = table.entries.size();
    if (n == 0) return table;
    if (n == 1) {
        table.entries[0].length = 1;
        return table;
    }

    // Node ids < n are leaves; ties break on id so the result is deterministic.
    std::vector<std::size_t> parent(2 * n - 1, 0);
    using item = std::pair<std::uint64_t, std::size_t>;
    std::priority_queue<item, std::vector<item>, std::greater<>> heap;
    for (std::size_t i = 0; i < n; ++i) heap.emplace(freq[table.entries[i].symbol], i);
    std::size_t next = n;
    while (heap.size() > 1) {
        auto [wa, a] = heap.top();
        heap.pop();
        auto [wb, b] = heap.top();
        heap.pop();
        parent[a] = parent[b] = next;
        heap.emplace(wa + wb, next++);
    }
    const std::size_t root = next - 1;
    std::vector<unsigned> depth(2 * n - 1, 0);
    for (std::size_t node = root; node-- > 0;) depth[node] = depth[parent[node]] + 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (depth[i] > max_code_length) throw format_error("huffman: code length limit exceeded");
        table.entries[i].length = static_cast<std::uint8_t>(depth[i]);
    }
    return table;
}

bytes huffman_encode(std::span<const std::uint32_t> codes, std::uint32_t alphabet) {
    std::vector<std::uint64_t> freq(alphabet, 0);
    for (auto c: codes) {
        if (c >= alphabet) throw usage_error("huffman: symbol " + std::to_string(c) + " outside alphabet");
        ++freq[c];
    }
    const auto table = HuffmanTable::from_frequencies(freq);
    std::vector<std::size_t> order;
    const auto cc = assign_codes(table, order);

    std::vector<std::uint32_t> position(alphabet, 0);
    for (std::size_t i = 0; i < table.entries.size(); ++i) position[table.entries[i].symbol] = static_cast<std::uint32_t>(i);

    bit_writer bits;
    for (auto c: codes) bits.put(cc.code[position[c]], cc.length[position[c]]);

    byte_writer out;
    out.put<std::uint32_t>(static_cast<std::uint32_t>(table.entries.size()));
    for (const auto &e: table.entries) {
        out.put<std::uint32_t>(e.symbol);
        out.put<std::uint8_t>(e.length);
    }
    out.put<std::uint64_t>(bits.bits());
    auto payload = bits.finish();
    out.put_bytes(payload);
    return out.take();
}

std::vector<std::uint32_t> huffman_decode(byte_reader &in) {
    HuffmanTable table;
    const auto n = in.get<std::uint32_t>();
    if (n > in.remaining() / 5) throw format_error("huffman: table overruns stream");
    table.entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto sym = in.get<std::uint32_t>();
        const auto len = in.get<std::uint8_t>();
        if (len == 0 || len > max_code_length) throw format_error("huffman: invalid code length");
        if (i > 0 && sym <= table.entries.back().symbol) throw format_error("huffman: table symbols not increasing");
        table.entries.push_back({sym, len});
    }
    // The encoder only emits complete codes (Kraft sum exactly one), or a
    // single 1-bit code.
    if (n == 1 && table.entries[0].length != 1) throw format_error("huffman: invalid single-symbol table");
    if (n > 1) {
        unsigned __int128 kraft = 0;
        for (const auto &e: table.entries) kraft += static_cast<unsigned __int128>(1) << (max_code_length - e.length);
        if (kraft != (static_cast<unsigned __int128>(1) << max_code_length)) throw format_error("huffman: corrupt code table");
    }

    const auto bit_count = in.get<std::uint64_t>();
    const std::uint64_t byte_count = bit_count / 8 + (bit_count % 8 ? 1 : 0);
    if (byte_count > in.remaining()) throw format_error("huffman: truncated payload");
    if (n == 0 && bit_count != 0) throw format_error("huffman: payload without table");
    auto payload = in.get_bytes(static_cast<std::size_t>(byte_count));

    std::vector<std::size_t> order;
    const auto cc = assign_codes(table, order);
    // Per-length canonical ranges: codes of length L are first[L] .. first[L]+count[L]-1.
    std::vector<std::uint64_t> first(max_code_length + 2, 0);
    std::vector<std::size_t> count(max_code_length + 2, 0), offset(max_code_length + 2, 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto len = cc.length[order[r]];
        if (count[len]++ == 0) {
            first[len] = cc.code[order[r]];
            offset[len] = r;
        }
    }

    std::vector<std::uint32_t> out;
    std::uint64_t code = 0;
    unsigned len = 0;
    for (std::uint64_t b = 0; b < bit_count; ++b) {
        const unsigned bit = (payload[b >> 3] >> (7 - (b & 7))) & 1u;
        code = (code << 1) | bit;
        ++len;
        if (len > max_code_length) throw format_error("huffman: invalid codeword");
        if (count[len] && code >= first[len] && code - first[len] < count[len]) {
            out.push_back(table.entries[order[offset[len] + (code - first[len])]].symbol);
            code = 0;
            len = 0;
        }
    }
    if (len != 0) throw format_error("huffman: stream ends inside a codeword");
    return out;
}

std::vector<std::uint32_t> huffman_decode(std::span<const std::uint8_t> stream) {
    byte_reader in(stream);
    auto out = huffman_decode(in);
    if (!in.exhausted()) throw format_error("huffman: trailing bytes after payload");
    return out;
}

bytes backend_encode(std::span<const std::uint8_t> data) {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    bytes z(bound);
    if (compress2(z.data(), &bound, data.data(), static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION) != Z_OK)
        throw format_error("backend: deflate failed");
    z.resize(bound);
    byte_writer out;
    out.put<std::uint64_t>(data.size());
    out.put_bytes(z);
    return out.take();
}

bytes backend_decode(std::span<const std::uint8_t> data) {
    byte_reader in(data);
    const auto raw = in.get<std::uint64_t>();
    const auto z = in.get_bytes(in.remaining());
    // Deflate cannot expand input by more than ~1032:1.
    if (raw > 1040 * static_cast<std::uint64_t>(z.size()) + 64) throw format_error("backend: implausible raw length");
    bytes out(static_cast<std::size_t>(raw));
    uLongf got = static_cast<uLongf>(raw);
    const int rc = uncompress(out.data(), &got, z.data(), static_cast<uLong>(z.size()));
    if (rc != Z_OK || got != raw) throw format_error("backend: corrupt stream");
    return out;
}

}  // namespace aesz
