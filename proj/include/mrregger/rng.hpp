#pragma once

#include <cstdint>
#include <limits>

namespace mrregger {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Small counter-style generator. Each (seed, a, b) key yields an independent
/// stream, so per-SNP draws do not depend on iteration order or thread count.
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  explicit StreamEngine(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
      : state_(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Stream domains keep the generator, selection and flip draws apart.
enum class StreamDomain : std::uint64_t { kGenerate = 1, kSelection = 2 };

inline std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(domain) << 56)) + index);
}

}  // namespace mrregger
