#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace prescreen {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a substream seed from a root seed and a sequence of keys.
///
/// The result depends only on the values and their order, so any work item
/// identified by the same key tuple gets the same stream regardless of which
/// thread evaluates it or in which order.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(root);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::uint64_t key_of(double v) noexcept { return std::bit_cast<std::uint64_t>(v); }

inline std::uint64_t key_of(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

/// Seeded random stream: std::mt19937_64 with the standard distributions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return unit_(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace prescreen
