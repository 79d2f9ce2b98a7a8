#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowids {

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::vector<uint8_t>& bytes);
std::string sha256_file(const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t len);

}  // namespace flowids
