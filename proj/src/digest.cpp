#include "flowids/digest.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "flowids/util.hpp"

namespace flowids {

std::string sha256_hex(const void* data, size_t len) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr))
        throw Error("sha256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::vector<uint8_t>& bytes) {
    return sha256_hex(bytes.data(), bytes.size());
}

std::string sha256_file(const std::string& path) {
    std::vector<uint8_t> bytes = read_file_bytes(path);
    return sha256_hex(bytes);
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("cannot open file: " + path);
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size))
        throw Error("cannot read file: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const void* data, size_t len) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) throw Error("write failed: " + path);
}

}  // namespace flowids
