#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace autopk {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// FNV-1a, 64-bit, with a caller-chosen seed folded into the offset basis.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

}  // namespace autopk
