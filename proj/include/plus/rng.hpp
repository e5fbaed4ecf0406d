#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace plus {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Stable seed for a pipeline stage, e.g. derive_seed(master, "mine", class_id).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t id = 0) noexcept;

inline double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based uniform draw in [0,1) keyed by up to four integers. The value
/// depends only on the key, so draws can be evaluated in any order or thread.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  return to_unit(combine(combine(combine(seed, a), b), c));
}

/// Sequential stream over mt19937_64 with portable helper distributions
/// (the std distributions are implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return to_unit(engine_()); }

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

/// Normal(mean 1, sd 1/3) clamped to [0, 2] from two uniforms (Box-Muller).
inline double truncated_gate_normal(double u1, double u2) noexcept {
  const double radius = std::sqrt(-2.0 * std::log1p(-u1));
  const double z = radius * std::cos(6.283185307179586 * u2);
  const double v = 1.0 + z / 3.0;
  return v < 0.0 ? 0.0 : (v > 2.0 ? 2.0 : v);
}

}  // namespace plus
