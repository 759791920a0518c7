// rng.hpp
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace cfal {

/// Identity of the generator recorded in run metadata.
inline constexpr std::string_view kRngId = "mt19937_64/bits53-v1";

/// Seeded random source. All draws are derived from raw engine bits so the
/// streams do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform index in [0, n).
  std::size_t below(std::size_t n);

  /// Index drawn by inverting a cumulative distribution (last entry ~ 1).
  std::size_t discrete(std::span<const double> cdf);

  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t bits() { return engine_(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer over the pair; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// FNV-1a over the bytes of a string.
std::uint64_t hash_string(std::string_view s);

}  // namespace cfal
