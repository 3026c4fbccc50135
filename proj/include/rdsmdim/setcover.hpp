#pragma once

// Minimal covers of a finite universe by a family of subsets, in two flavours:
// covering everything, and covering weight strictly above a target.  Exact
// search is used for small families, lowest-index greedy otherwise.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "base.hpp"

namespace rdsmdim {

struct CoverSolution {
  std::size_t count = 0;
  bool exact = false;
  std::vector<std::size_t> chosen;  // indices into the family as passed in
};

inline constexpr std::size_t kExhaustiveLimit = 20;

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline Bits to_bits(const std::vector<std::uint32_t>& set, std::size_t universe) {
  Bits b((universe + 63) / 64, 0);
  for (auto e : set) b[e >> 6] |= std::uint64_t{1} << (e & 63);
  return b;
}

struct Reduced {
  std::vector<std::size_t> keep;  // indices into the original family
  bool partition = false;         // kept sets are pairwise disjoint
};

// Drops empty and duplicate sets, detects pairwise disjointness, and removes
// sets contained in another kept set when the family is small enough.
inline Reduced reduce_family(const std::vector<std::vector<std::uint32_t>>& sets, std::size_t universe) {
  Reduced r;
  std::map<std::vector<std::uint32_t>, std::size_t> seen;
  std::vector<std::vector<std::uint32_t>> sorted(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    sorted[i] = sets[i];
    std::sort(sorted[i].begin(), sorted[i].end());
    sorted[i].erase(std::unique(sorted[i].begin(), sorted[i].end()), sorted[i].end());
    if (sorted[i].empty()) continue;
    if (seen.emplace(sorted[i], i).second) r.keep.push_back(i);
  }
  std::vector<std::uint8_t> hit(universe, 0);
  bool disjoint = true;
  for (auto i : r.keep)
    for (auto e : sorted[i]) {
      if (e >= universe) throw std::out_of_range("set element outside the universe");
      if (hit[e]) disjoint = false;
      hit[e] = 1;
    }
  r.partition = disjoint;
  if (disjoint || r.keep.size() > 2000) return r;

  std::vector<std::size_t> kept;
  for (std::size_t a = 0; a < r.keep.size(); ++a) {
    const auto& A = sorted[r.keep[a]];
    bool dominated = false;
    for (std::size_t b = 0; b < r.keep.size() && !dominated; ++b) {
      if (a == b) continue;
      const auto& B = sorted[r.keep[b]];
      if (B.size() > A.size() && std::includes(B.begin(), B.end(), A.begin(), A.end())) dominated = true;
    }
    if (!dominated) kept.push_back(r.keep[a]);
  }
  r.keep = std::move(kept);
  return r;
}

// Calls visit(indices) for every k-subset of [0, m) in lexicographic order
// until visit returns true.
template <class Visit>
bool for_each_combination(std::size_t m, std::size_t k, Visit&& visit) {
  if (k > m) return false;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (visit(idx)) return true;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Smallest subfamily whose union is the whole universe [0, universe).
/// Throws std::domain_error when the family does not cover the universe.
inline CoverSolution min_set_cover(const std::vector<std::vector<std::uint32_t>>& sets, std::size_t universe,
                                   std::size_t exhaustive_limit = kExhaustiveLimit) {
  CoverSolution sol;
  if (universe == 0) {
    sol.exact = true;
    return sol;
  }
  auto red = detail::reduce_family(sets, universe);
  {
    std::vector<std::uint8_t> hit(universe, 0);
    for (auto i : red.keep)
      for (auto e : sets[i]) hit[e] = 1;
    for (std::size_t e = 0; e < universe; ++e)
      if (!hit[e]) throw std::domain_error("family does not cover element " + std::to_string(e));
  }
  if (red.partition) {
    sol.count = red.keep.size();
    sol.chosen = red.keep;
    sol.exact = true;
    return sol;
  }
  const std::size_t m = red.keep.size();
  if (m <= exhaustive_limit) {
    std::vector<detail::Bits> bits;
    for (auto i : red.keep) bits.push_back(detail::to_bits(sets[i], universe));
    detail::Bits full((universe + 63) / 64, ~std::uint64_t{0});
    if (universe % 64) full.back() = (std::uint64_t{1} << (universe % 64)) - 1;
    for (std::size_t k = 1; k <= m; ++k) {
      std::vector<std::size_t> found;
      const bool ok = detail::for_each_combination(m, k, [&](const std::vector<std::size_t>& idx) {
        detail::Bits u(full.size(), 0);
        for (auto i : idx)
          for (std::size_t w = 0; w < u.size(); ++w) u[w] |= bits[i][w];
        if (u == full) {
          found = idx;
          return true;
        }
        return false;
      });
      if (ok) {
        sol.count = k;
        for (auto i : found) sol.chosen.push_back(red.keep[i]);
        sol.exact = true;
        return sol;
      }
    }
  }
  // Greedy: largest number of newly covered elements, lowest index on ties.
  std::vector<std::uint8_t> covered(universe, 0);
  std::size_t remaining = universe;
  std::vector<std::uint8_t> used(m, 0);
  while (remaining > 0) {
    std::size_t best = m, best_gain = 0;
    for (std::size_t a = 0; a < m; ++a) {
      if (used[a]) continue;
      std::size_t gain = 0;
      for (auto e : sets[red.keep[a]]) gain += covered[e] ? 0 : 1;
      if (gain > best_gain) best = a, best_gain = gain;
    }
    used[best] = 1;
    sol.chosen.push_back(red.keep[best]);
    for (auto e : sets[red.keep[best]])
      if (!covered[e]) covered[e] = 1, --remaining;
  }
  sol.count = sol.chosen.size();
  sol.exact = false;
  return sol;
}

/// Smallest subfamily whose union has weight strictly greater than `target`.
/// Throws std::domain_error (with the deficit) when even the whole family
/// falls short.
inline CoverSolution min_mass_cover(const std::vector<std::vector<std::uint32_t>>& sets,
                                    const std::vector<double>& weights, double target,
                                    std::size_t exhaustive_limit = kExhaustiveLimit) {
  const std::size_t universe = weights.size();
  CoverSolution sol;
  if (target < 0.0) {
    sol.exact = true;
    return sol;
  }
  auto red = detail::reduce_family(sets, universe);
  auto mass_of = [&](const std::vector<std::uint32_t>& s) {
    double acc = 0.0;
    std::vector<std::uint32_t> u = s;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    for (auto e : u) acc += weights[e];
    return acc;
  };
  {
    std::vector<std::uint8_t> hit(universe, 0);
    double total = 0.0;
    for (auto i : red.keep)
      for (auto e : sets[i])
        if (!hit[e]) hit[e] = 1, total += weights[e];
    if (!mass_exceeds(total, target))
      throw std::domain_error("available sets reach mass " + std::to_string(total) + ", short of the target by " +
                              std::to_string(target - total));
  }
  if (red.partition) {
    std::vector<std::pair<double, std::size_t>> ms;
    for (auto i : red.keep) ms.emplace_back(mass_of(sets[i]), i);
    std::stable_sort(ms.begin(), ms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double acc = 0.0;
    for (const auto& [w, i] : ms) {
      acc += w;
      sol.chosen.push_back(i);
      if (mass_exceeds(acc, target)) break;
    }
    sol.count = sol.chosen.size();
    sol.exact = true;
    return sol;
  }
  const std::size_t m = red.keep.size();
  if (m <= exhaustive_limit) {
    std::vector<detail::Bits> bits;
    std::vector<double> single;
    for (auto i : red.keep) {
      bits.push_back(detail::to_bits(sets[i], universe));
      single.push_back(mass_of(sets[i]));
    }
    std::vector<double> top = single;
    std::sort(top.begin(), top.end(), std::greater<>());
    double top_sum = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
      top_sum += top[k - 1];
      if (!mass_exceeds(top_sum, target)) continue;  // no k sets can reach the target
      std::vector<std::size_t> found;
      const bool ok = detail::for_each_combination(m, k, [&](const std::vector<std::size_t>& idx) {
        detail::Bits u(bits[0].size(), 0);
        for (auto i : idx)
          for (std::size_t w = 0; w < u.size(); ++w) u[w] |= bits[i][w];
        double acc = 0.0;
        for (std::size_t w = 0; w < u.size(); ++w)
          for (std::uint64_t v = u[w]; v; v &= v - 1) acc += weights[w * 64 + static_cast<std::size_t>(__builtin_ctzll(v))];
        if (mass_exceeds(acc, target)) {
          found = idx;
          return true;
        }
        return false;
      });
      if (ok) {
        sol.count = k;
        for (auto i : found) sol.chosen.push_back(red.keep[i]);
        sol.exact = true;
        return sol;
      }
    }
  }
  std::vector<std::uint8_t> covered(universe, 0);
  std::vector<std::uint8_t> used(m, 0);
  double acc = 0.0;
  while (!mass_exceeds(acc, target)) {
    std::size_t best = m;
    double best_gain = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      if (used[a]) continue;
      double gain = 0.0;
      for (auto e : sets[red.keep[a]]) gain += covered[e] ? 0.0 : weights[e];
      if (gain > best_gain) best = a, best_gain = gain;
    }
    if (best == m) throw std::domain_error("greedy mass cover stalled below the target");
    used[best] = 1;
    sol.chosen.push_back(red.keep[best]);
    for (auto e : sets[red.keep[best]])
      if (!covered[e]) covered[e] = 1, acc += weights[e];
  }
  sol.count = sol.chosen.size();
  sol.exact = false;
  return sol;
}

}  // namespace rdsmdim
