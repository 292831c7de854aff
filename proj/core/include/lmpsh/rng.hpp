#pragma once

#include <cmath>
#include <cstdint>

namespace lmpsh {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for replication / fold / subject `index` under `master`.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based uniform stream: draw k of stream s depends only on (seed, s, k),
/// so subjects can be generated in any order or in parallel.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(derive_seed(seed, stream)) {}

  /// Uniform on the open interval (0, 1).
  double uniform_at(std::uint64_t k) const noexcept {
    const std::uint64_t bits = splitmix64(key_ ^ splitmix64(k + 1));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double next() noexcept { return uniform_at(counter_++); }

  std::uint64_t next_u64() noexcept { return splitmix64(key_ ^ splitmix64(~counter_++)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lmpsh
