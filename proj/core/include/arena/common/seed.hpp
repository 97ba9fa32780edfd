#pragma once

#include <cstdint>
#include <string_view>

namespace arena {

/// SplitMix64 finalizer; used to derive independent stream seeds from a root seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a) { return mix64(root ^ mix64(a)); }

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(root, a), b);
}

/// FNV-1a; stable across platforms, so policy names can seed parameter initialization.
constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace arena
