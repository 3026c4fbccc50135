#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace rdsmdim {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of one random stream.
///
/// The stream name identifies the consumer (module and purpose) and the cell
/// indices identify the cell.  Equal inputs always give the same seed, and the
/// value depends on nothing else, so adding or removing cells never shifts the
/// randomness of the cells that remain.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::initializer_list<std::uint64_t> cell = {}) {
  std::uint64_t h = mix64(master ^ mix64(fnv1a64(stream)));
  for (std::uint64_t c : cell) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// mt19937_64 output is fixed by the standard; the conversions below are ours,
// so sampled values agree across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % bound;
  }

  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      acc += probs[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rdsmdim
