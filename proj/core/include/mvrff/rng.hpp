#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mvrff {

// Every randomized subsystem draws from its own engine seeded by
// derive_seed(master, label).  Labels are fixed strings, so the stream a
// subsystem sees never depends on call order elsewhere.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the label
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull + h;  // splitmix64 mix
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index) {
  return derive_seed(derive_seed(master, label) ^ (index * 0x9e3779b97f4a7c15ull),
                     "idx");
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::string_view label) {
  return std::mt19937_64(derive_seed(master, label));
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::string_view label,
                                   std::uint64_t index) {
  return std::mt19937_64(derive_seed(master, label, index));
}

}  // namespace mvrff
