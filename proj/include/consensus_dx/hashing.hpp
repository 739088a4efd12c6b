#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace consensus_dx {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace consensus_dx
