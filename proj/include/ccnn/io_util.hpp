#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccnn {

// Raised by file loaders on malformed content; message names the bad field.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, std::size_t size);
bool file_exists(const std::string& path);

// little-endian f64 payloads, independent of host byte order
void append_f64le(std::vector<std::uint8_t>& out, const double* values, std::size_t count);
void read_f64le(const std::uint8_t* in, double* values, std::size_t count);

// FNV-1a 64-bit, hex string; used for run.json artifact checksums
std::string fnv1a64_hex(const void* data, std::size_t size);
std::string file_checksum(const std::string& path);

}  // namespace ccnn
