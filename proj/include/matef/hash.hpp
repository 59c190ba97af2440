#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace matef {

/// SHA-256 of the given bytes as 64 lowercase hex characters.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// FNV-1a 64-bit (offset 0xcbf29ce484222325, prime 0x100000001b3).
std::uint64_t fnv1a64(std::string_view text);

bool is_sha256_hex(std::string_view text);

} // namespace matef
