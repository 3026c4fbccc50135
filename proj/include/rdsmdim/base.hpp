#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"

namespace rdsmdim {

inline constexpr double kProbabilityTolerance = 1e-12;

/// Negative-time symbols kept by default on two-sided bases.
inline constexpr std::size_t kDefaultPast = 64;

/// Masses within this distance of a threshold count as equal to it, so that
/// ties like 0.81 + 0.09 against 0.9 do not depend on rounding.
inline constexpr double kMassTieTolerance = 1e-12;

/// Strict comparison mass > target up to rounding.
inline bool mass_exceeds(double mass, double target) { return mass > target + kMassTieTolerance; }

/// Smallest integer j with j > ratio, where a ratio within rounding of an
/// integer counts as that integer.
inline double smallest_integer_above(double ratio) {
  const double nearest = std::round(ratio);
  const bool tie = std::fabs(ratio - nearest) <= 1e-9 * std::max(1.0, std::fabs(nearest));
  return (tie ? nearest : std::floor(ratio)) + 1.0;
}

inline void validate_probability_vector(std::span<const double> p, std::string_view what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string(what) + ": probability entry outside [0,1]");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > kProbabilityTolerance)
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(sum) +
                                ", not 1");
}

/// Law of the driving symbol sequence: i.i.d. (Bernoulli) or a Markov chain.
struct BaseProcess {
  std::size_t alphabet_size = 1;
  std::vector<double> law{1.0};                  // Bernoulli vector, or Markov initial law
  std::vector<std::vector<double>> transition;   // row-stochastic; empty for Bernoulli
  bool two_sided = true;

  static BaseProcess deterministic() { return {}; }

  static BaseProcess bernoulli(std::vector<double> p, bool two_sided = true) {
    BaseProcess b;
    b.alphabet_size = p.size();
    b.law = std::move(p);
    b.two_sided = two_sided;
    b.validate();
    return b;
  }

  static BaseProcess markov(std::vector<double> initial, std::vector<std::vector<double>> rows,
                            bool two_sided = true) {
    BaseProcess b;
    b.alphabet_size = initial.size();
    b.law = std::move(initial);
    b.transition = std::move(rows);
    b.two_sided = two_sided;
    b.validate();
    return b;
  }

  bool is_markov() const noexcept { return !transition.empty(); }

  void validate() const {
    if (alphabet_size == 0) throw std::invalid_argument("base alphabet must be nonempty");
    if (law.size() != alphabet_size) throw std::invalid_argument("base law length differs from alphabet size");
    validate_probability_vector(law, "base law");
    if (is_markov()) {
      if (transition.size() != alphabet_size)
        throw std::invalid_argument("Markov matrix must be square of alphabet size");
      for (const auto& row : transition) {
        if (row.size() != alphabet_size)
          throw std::invalid_argument("Markov matrix must be square of alphabet size");
        validate_probability_vector(row, "Markov row");
      }
    }
  }

  /// Every state reaches every other state through positive transitions.
  bool irreducible() const {
    const std::size_t k = alphabet_size;
    for (std::size_t start = 0; start < k; ++start) {
      std::vector<char> seen(k, 0);
      std::vector<std::size_t> stack{start};
      seen[start] = 1;
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < k; ++j)
          if (transition[i][j] > 0.0 && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
      }
      if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
    }
    return true;
  }

  /// A stationary law.  For Bernoulli bases this is the law itself.  An
  /// irreducible chain has a unique one, found by solving pi P = pi.  Other
  /// chains use the Cesàro limit of the chain started from `law`, which exists
  /// for every finite chain (periodic ones included).
  std::vector<double> stationary_law() const {
    if (!is_markov()) return law;
    const std::size_t k = alphabet_size;
    if (irreducible()) return solve_stationary();
    std::vector<double> cur = law, next(k), avg(k, 0.0);
    constexpr int kSteps = 4096;
    for (int t = 0; t < kSteps; ++t) {
      for (std::size_t i = 0; i < k; ++i) avg[i] += cur[i];
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < k; ++i)
        if (cur[i] != 0.0)
          for (std::size_t j = 0; j < k; ++j) next[j] += cur[i] * transition[i][j];
      cur.swap(next);
    }
    double sum = 0.0;
    for (double& v : avg) sum += v;
    for (double& v : avg) v /= sum;
    return avg;
  }

 private:
  // Gaussian elimination on (P^T - I) pi = 0 with the last equation replaced
  // by sum(pi) = 1.
  std::vector<double> solve_stationary() const {
    const std::size_t k = alphabet_size;
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) a[i][j] = transition[j][i] - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j <= k; ++j) a[k - 1][j] = 1.0;
    for (std::size_t col = 0; col < k; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < k; ++r)
        if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
      std::swap(a[col], a[piv]);
      for (std::size_t r = 0; r < k; ++r) {
        if (r == col || a[r][col] == 0.0) continue;
        const double f = a[r][col] / a[col][col];
        for (std::size_t j = col; j <= k; ++j) a[r][j] -= f * a[col][j];
      }
    }
    std::vector<double> pi(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += (pi[i] = std::max(0.0, a[i][k] / a[i][i]));
    for (double& v : pi) v /= sum;
    return pi;
  }

 public:

  /// Entropy rate in nats per symbol of the stationary process.
  double entropy_rate() const {
    auto h = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    if (!is_markov()) {
      double s = 0.0;
      for (double p : law) s += h(p);
      return s;
    }
    const auto pi = stationary_law();
    double s = 0.0;
    for (std::size_t i = 0; i < alphabet_size; ++i)
      for (double p : transition[i]) s += pi[i] * h(p);
    return s;
  }
};

/// A sampled environment: symbols[origin_offset + t] is the symbol at time t.
struct BaseTrajectory {
  std::vector<std::uint32_t> symbols;
  std::size_t origin_offset = 0;
  std::uint64_t id = 0;  // provenance tag, usually the seed that produced it

  /// Number of available symbols at times 0, 1, 2, ...
  std::size_t horizon() const noexcept { return symbols.size() - origin_offset; }
  /// Number of available symbols at negative times.
  std::size_t past_length() const noexcept { return origin_offset; }

  std::uint32_t at(std::ptrdiff_t t) const {
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(origin_offset) + t;
    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(symbols.size()))
      throw std::out_of_range("environment time " + std::to_string(t) + " outside the sampled window");
    return symbols[static_cast<std::size_t>(idx)];
  }
  std::uint32_t operator[](std::ptrdiff_t t) const { return at(t); }

  /// The trajectory of the shifted environment theta^k omega.
  BaseTrajectory shifted(std::size_t k) const {
    if (k > horizon()) throw std::out_of_range("shift beyond the sampled horizon");
    BaseTrajectory s = *this;
    s.origin_offset += k;
    return s;
  }

  bool operator==(const BaseTrajectory&) const = default;
};

/// Draws an environment with `horizon` forward symbols.  Two-sided bases also
/// get `past` negative-time symbols (default kDefaultPast).  A two-sided
/// Markov base starts from its stationary law at the earliest sampled time; a
/// one-sided one starts from its initial law at time 0.
inline BaseTrajectory sample_base(const BaseProcess& base, std::uint64_t seed, std::size_t horizon,
                                  std::optional<std::size_t> past = std::nullopt) {
  if (horizon == 0) throw std::invalid_argument("sample_base: horizon must be at least 1");
  base.validate();
  const std::size_t back = base.two_sided ? past.value_or(kDefaultPast) : 0;
  BaseTrajectory traj;
  traj.id = seed;
  traj.origin_offset = back;
  traj.symbols.resize(back + horizon);
  if (base.alphabet_size == 1) return traj;  // all zeros; no randomness consumed

  Rng rng(seed);
  if (!base.is_markov()) {
    for (auto& s : traj.symbols) s = static_cast<std::uint32_t>(rng.categorical(base.law));
    return traj;
  }
  const std::vector<double> start = base.two_sided ? base.stationary_law() : base.law;
  std::size_t cur = rng.categorical(start);
  traj.symbols[0] = static_cast<std::uint32_t>(cur);
  for (std::size_t i = 1; i < traj.symbols.size(); ++i) {
    cur = rng.categorical(base.transition[cur]);
    traj.symbols[i] = static_cast<std::uint32_t>(cur);
  }
  return traj;
}

}  // namespace rdsmdim
