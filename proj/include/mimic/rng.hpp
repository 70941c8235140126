#ifndef MIMIC_RNG_HPP
#define MIMIC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace mimic {

/// SplitMix64 finaliser: a bijective mix of 64-bit words.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream key of path `index` under `seed`.
inline constexpr std::uint64_t hash64(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

/// Counter-based generator: the k-th draw is a pure function of (key, k), so
/// a path's randomness does not depend on which thread simulates it.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }
  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  /// Exponential with the given rate.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mimic

#endif  // MIMIC_RNG_HPP
