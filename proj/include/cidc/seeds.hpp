#pragma once

#include <cstdint>
#include <initializer_list>

namespace cidc {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of identifying fields into one RNG seed.
/// Distinct part sequences map to distinct seeds for every grid this
/// toolkit enumerates (checked by test).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5EED0FDE5Cull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ (p + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
  return h;
}

}  // namespace cidc
