#include "aesz/byte_io.hpp"

#include <fstream>
#include <iterator>

namespace aesz {

bytes read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failed: " + path);
    return data;
}

void write_file(const std::string &path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot create " + path);
    out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace aesz
