#ifndef AESZ_BYTE_IO_HPP
#define AESZ_BYTE_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace aesz {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

/// Raised for malformed, truncated or inconsistent byte streams.
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using bytes = std::vector<std::uint8_t>;

class byte_writer {
public:
    template<class T>
    requires std::is_arithmetic_v<T>
    void put(T value) {
        const auto old = buf_.size();
        buf_.resize(old + sizeof(T));
        std::memcpy(buf_.data() + old, &value, sizeof(T));
    }

    template<class T>
    requires std::is_arithmetic_v<T>
    void put_array(std::span<const T> values) {
        const auto old = buf_.size();
        buf_.resize(old + values.size_bytes());
        if (!values.empty()) std::memcpy(buf_.data() + old, values.data(), values.size_bytes());
    }

    void put_bytes(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    void put_magic(std::string_view magic) { buf_.insert(buf_.end(), magic.begin(), magic.end()); }

    std::size_t size() const { return buf_.size(); }
    bytes &buffer() { return buf_; }
    bytes take() { return std::move(buf_); }

private:
    bytes buf_;
};

class byte_reader {
public:
    explicit byte_reader(std::span<const std::uint8_t> data) : data_(data) {}

    template<class T>
    requires std::is_arithmetic_v<T>
    T get() {
        require(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    template<class T>
    requires std::is_arithmetic_v<T>
    std::vector<T> get_array(std::size_t count) {
        if (count > remaining() / sizeof(T)) throw format_error("truncated stream: array overruns input");
        std::vector<T> out(count);
        if (count) std::memcpy(out.data(), data_.data() + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
        return out;
    }

    std::span<const std::uint8_t> get_bytes(std::size_t count) {
        require(count);
        auto out = data_.subspan(pos_, count);
        pos_ += count;
        return out;
    }

    void expect_magic(std::string_view magic) {
        auto got = get_bytes(magic.size());
        if (std::memcmp(got.data(), magic.data(), magic.size()) != 0)
            throw format_error("bad magic: expected \"" + std::string(magic) + "\"");
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void require(std::size_t n) const {
        if (n > remaining()) throw format_error("truncated stream");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

bytes read_file(const std::string &path);
void write_file(const std::string &path, std::span<const std::uint8_t> data);

}  // namespace aesz

#endif
