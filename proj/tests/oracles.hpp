#pragma once

// Brute-force reference computations.  They share no code with the library
// beyond the plain data types: orbits are recomputed here from the
// definitions, and every optimum is found by exhaustive search.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Word = std::vector<std::uint8_t>;

/// Every word of the given length over k letters, lexicographic.
inline std::vector<Word> all_words(std::size_t k, std::size_t length) {
  std::vector<Word> out{Word{}};
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<Word> next;
    for (const auto& w : out)
      for (std::size_t a = 0; a < k; ++a) {
        Word v = w;
        v.push_back(static_cast<std::uint8_t>(a));
        next.push_back(std::move(v));
      }
    out.swap(next);
  }
  return out;
}

/// 2^-(first index where x and y differ); 0 when they agree on the common prefix.
inline double word_distance(const Word& x, const Word& y) {
  const std::size_t len = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < len; ++i)
    if (x[i] != y[i]) return std::ldexp(1.0, -static_cast<int>(i));
  return 0.0;
}

/// Bowen distance of the plain left shift: max over i < n of the distance
/// between the i-times shifted words.
inline double shift_bowen_distance(const Word& x, const Word& y, std::size_t n) {
  double d = 0.0;
  for (std::size_t i = 0; i < n && i < x.size(); ++i) {
    const Word xs(x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
    const Word ys(y.begin() + static_cast<std::ptrdiff_t>(i), y.end());
    d = std::max(d, word_distance(xs, ys));
  }
  return d;
}

/// Circle distance and the Bowen distance of x -> m x mod 1.
inline double arc(double x, double y) {
  const double d = std::fabs(x - y);
  return std::min(d, 1.0 - d);
}

inline double doubling_bowen_distance(double x, double y, std::size_t n, unsigned m = 2) {
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max(d, arc(x, y));
    x = std::fmod(m * x, 1.0);
    y = std::fmod(m * y, 1.0);
  }
  return d;
}

using Dist = std::function<double(std::size_t, std::size_t)>;

/// Largest subset of {0..m-1} with pairwise distance > eps (maximum clique,
/// Bron-Kerbosch with pivoting on 64-bit masks).
inline std::size_t max_separated(std::size_t m, const Dist& d, double eps) {
  if (m > 64) throw std::invalid_argument("oracle::max_separated supports at most 64 points");
  std::vector<std::uint64_t> adj(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && d(i, j) > eps) adj[i] |= std::uint64_t{1} << j;
  std::size_t best = 0;
  std::function<void(std::uint64_t, std::uint64_t, std::uint64_t, std::size_t)> bk =
      [&](std::uint64_t r, std::uint64_t p, std::uint64_t x, std::size_t size) {
        if (!p && !x) {
          best = std::max(best, size);
          return;
        }
        if (size + static_cast<std::size_t>(std::popcount(p)) <= best) return;
        const std::uint64_t px = p | x;
        const auto u = static_cast<std::size_t>(std::countr_zero(px));
        std::uint64_t cand = p & ~adj[u];
        while (cand) {
          const auto v = static_cast<std::size_t>(std::countr_zero(cand));
          const std::uint64_t bit = std::uint64_t{1} << v;
          bk(r | bit, p & adj[v], x & adj[v], size + 1);
          p &= ~bit;
          x |= bit;
          cand &= ~bit;
        }
      };
  const std::uint64_t all = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
  bk(0, all, 0, 0);
  return best;
}

/// Exact minimum set cover of {0..universe-1} (branch on the lowest
/// uncovered element).
inline std::size_t min_cover(const std::vector<std::uint64_t>& sets, std::size_t universe) {
  if (universe > 64) throw std::invalid_argument("oracle::min_cover supports at most 64 elements");
  const std::uint64_t all = universe == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << universe) - 1;
  std::size_t best = sets.size() + 1;
  std::function<void(std::uint64_t, std::size_t)> go = [&](std::uint64_t covered, std::size_t used) {
    if (used >= best) return;
    if ((covered & all) == all) {
      best = used;
      return;
    }
    const auto e = static_cast<std::size_t>(std::countr_zero(~covered & all));
    for (const auto s : sets)
      if (s >> e & 1) go(covered | s, used + 1);
  };
  go(0, 0);
  if (best > sets.size()) throw std::invalid_argument("oracle::min_cover: sets do not cover");
  return best;
}

/// Minimal number of closed eps-balls centred at points covering all points.
inline std::size_t min_spanning(std::size_t m, const Dist& d, double eps) {
  std::vector<std::uint64_t> balls(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (d(i, j) <= eps) balls[i] |= std::uint64_t{1} << j;
  return min_cover(balls, m);
}

/// Fewest sets whose union has total weight strictly above target, by
/// enumeration of all subfamilies (at most 22 sets).  Weights within 1e-12
/// of the target count as a tie, which does not exceed it.
inline std::size_t min_mass_sets(const std::vector<std::uint64_t>& sets, const std::vector<double>& weights,
                                 double target) {
  const std::size_t s = sets.size();
  if (s > 22) throw std::invalid_argument("oracle::min_mass_sets supports at most 22 sets");
  std::size_t best = s + 1;
  for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best) continue;
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < s; ++i)
      if (mask >> i & 1) u |= sets[i];
    double w = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j)
      if (u >> j & 1) w += weights[j];
    if (w > target + 1e-12) best = size;
  }
  if (best > s) throw std::invalid_argument("oracle::min_mass_sets: target unreachable");
  return best;
}

/// Product Bernoulli mass of a word.
inline double bernoulli_mass(const Word& w, const std::vector<double>& p) {
  double m = 1.0;
  for (auto a : w) m *= p[a];
  return m;
}

/// Katok count on the full shift by brute force: centres and test points are
/// all words of `depth` letters, balls are open in the n-step Bowen metric.
inline std::size_t full_shift_katok(std::size_t k, const std::vector<double>& p, std::size_t depth, std::size_t n,
                                    double eps, double delta) {
  const auto words = all_words(k, depth);
  std::vector<double> w;
  for (const auto& x : words) w.push_back(bernoulli_mass(x, p));
  std::vector<std::uint64_t> balls;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint64_t b = 0;
    for (std::size_t j = 0; j < words.size(); ++j)
      if (shift_bowen_distance(words[i], words[j], n) < eps) b |= std::uint64_t{1} << j;
    if (std::find(balls.begin(), balls.end(), b) == balls.end()) balls.push_back(b);
  }
  return min_mass_sets(balls, w, 1.0 - delta);
}

/// Shapira count for the cover by cylinders of length 1: the iterated cover
/// elements are the sets {x : x_0 = a_0, (shift x)_0 = a_1, ...}.
inline std::size_t full_shift_shapira_first_letter(std::size_t k, const std::vector<double>& p, std::size_t n,
                                                   double delta) {
  const auto words = all_words(k, n);
  std::vector<double> w;
  for (const auto& x : words) w.push_back(bernoulli_mass(x, p));
  std::vector<std::uint64_t> elements;
  for (const auto& itinerary : all_words(k, n)) {
    std::uint64_t e = 0;
    for (std::size_t j = 0; j < words.size(); ++j) {
      bool in = true;
      for (std::size_t t = 0; t < n; ++t) in = in && words[j][t] == itinerary[t];
      if (in) e |= std::uint64_t{1} << j;
    }
    elements.push_back(e);
  }
  return min_mass_sets(elements, w, 1.0 - delta);
}

}  // namespace oracle
