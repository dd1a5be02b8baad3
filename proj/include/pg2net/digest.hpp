#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pg2net {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
/// SHA-256 of a file's contents; throws DataError if unreadable.
std::string sha256_file(const std::string& path);
/// First eight bytes of the SHA-256, little-endian.
std::uint64_t digest64(std::string_view bytes);

/// splitmix64 finalizer; used to derive independent RNG seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(root) ^ a) ^ b);
}

/// Seed of a named stage: stable hash of (root, name).
std::uint64_t stage_seed(std::uint64_t root, std::string_view stage);

}  // namespace pg2net
