#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace finder::hashing {

/// Hex-encoded SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// 64-bit FNV-1a. Stable across platforms; used for hashed bag-of-words
/// bucketing, not for integrity checks.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace finder::hashing
