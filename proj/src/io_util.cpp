#include "ccnn/io_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ccnn {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff size = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
    if (size > 0) f.read(reinterpret_cast<char*>(out.data()), size);
    if (!f) throw FormatError("short read: " + path);
    return out;
}

void write_file_bytes(const std::string& path, const void* data, std::size_t size) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!f) throw std::runtime_error("short write: " + path);
}

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

void append_f64le(std::vector<std::uint8_t>& out, const double* values, std::size_t count) {
    std::size_t base = out.size();
    out.resize(base + 8 * count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[i], 8);
        for (int b = 0; b < 8; ++b)
            out[base + 8 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
}

void read_f64le(const std::uint8_t* in, double* values, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(in[8 * i + b]) << (8 * b);
        std::memcpy(&values[i], &bits, 8);
    }
}

std::string fnv1a64_hex(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string file_checksum(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return fnv1a64_hex(bytes.data(), bytes.size());
}

}  // namespace ccnn
