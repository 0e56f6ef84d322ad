#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace idw {

/// FIPS 180-4 SHA-256, hex-encoded digest.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file_hex(const std::string& path);

} // namespace idw
