#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace latlab {

uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL);
inline uint64_t fnv1a64(const std::vector<uint8_t>& bytes, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(bytes.data(), bytes.size(), h);
}
std::string hash_hex(uint64_t h);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t len);
/// Writes to <path>.tmp then renames, so readers never see partial content.
void write_file_atomic(const std::string& path, const std::string& content);
uint64_t file_hash(const std::string& path);

} // namespace latlab
