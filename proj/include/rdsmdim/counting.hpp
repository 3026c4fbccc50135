#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "cover.hpp"
#include "errors.hpp"
#include "setcover.hpp"
#include "system.hpp"

namespace rdsmdim {

enum class CountKind { sep, span, subcover, shapira, katok };
// `approximate` marks values computed on a finite atom surrogate of a measure
// that has no closed form at the requested resolution.
enum class Exactness { exact, greedy_lower, greedy_upper, approximate };

inline const char* to_string(CountKind k) {
  switch (k) {
    case CountKind::sep: return "sep";
    case CountKind::span: return "span";
    case CountKind::subcover: return "subcover";
    case CountKind::shapira: return "shapira";
    case CountKind::katok: return "katok";
  }
  return "?";
}

inline const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::exact: return "exact";
    case Exactness::greedy_lower: return "greedy-lower";
    case Exactness::greedy_upper: return "greedy-upper";
    case Exactness::approximate: return "approximate";
  }
  return "?";
}

/// One count with its parameters.  `value` can exceed the range of exact
/// integers in a double at large n; `log_value` is always computed directly.
struct CountRecord {
  CountKind kind = CountKind::sep;
  double value = 1.0;
  double log_value = 0.0;
  Exactness exactness = Exactness::exact;
  std::uint64_t omega_id = 0;
  std::size_t n = 1;
  double epsilon = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();

  static CountRecord from_value(CountKind kind, double value, Exactness ex, std::uint64_t omega, std::size_t n,
                                double eps, double delta = std::numeric_limits<double>::quiet_NaN()) {
    return {kind, value, std::log(value), ex, omega, n, eps, delta};
  }
  static CountRecord from_log(CountKind kind, double log_value, Exactness ex, std::uint64_t omega, std::size_t n,
                              double eps, double delta = std::numeric_limits<double>::quiet_NaN()) {
    return {kind, std::exp(log_value), log_value, ex, omega, n, eps, delta};
  }
};

/// max_{0 <= i < n} d(T^i x, T^i y).
inline double bowen_distance(const FiberedSystem& sys, const BaseTrajectory& env, const FiberPoint& x,
                             const FiberPoint& y, std::size_t n) {
  if (n == 0) throw std::invalid_argument("bowen_distance: n must be at least 1");
  if (env.horizon() < n) throw std::invalid_argument("bowen_distance: environment horizon shorter than n");
  FiberPoint a = x, b = y;
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max(d, sys.fiber.distance(a, b));
    if (i + 1 < n) {
      const auto s = env.at(static_cast<std::ptrdiff_t>(i));
      sys.apply_in_place(s, a);
      sys.apply_in_place(s, b);
    }
  }
  return d;
}

namespace detail {

// On shift-type symbolic systems a complete cylinder cloud deep enough to
// resolve the Bowen classes yields exact sep and span counts.
inline bool cloud_resolves_bowen_classes(const FiberedSystem& sys, const PointCloud& cloud, std::size_t n,
                                         double eps) {
  if (!sys.is_shift_type_symbolic() || cloud.provenance != CloudProvenance::grid) return false;
  return cloud.depth >= bowen_depth(n, separating_positions(sys.fiber, eps));
}

}  // namespace detail

struct SeparatedSet {
  std::vector<std::size_t> indices;  // into the cloud
  CountRecord record;
};

/// Greedy maximal (n, eps)-separated subset of a cloud: scan in index order,
/// keep a point when it is more than eps away (strictly) from every kept point.
inline SeparatedSet greedy_separated(const PointCloud& cloud, const FiberedSystem& sys, const BaseTrajectory& env,
                                     std::size_t n, double eps) {
  if (cloud.empty()) throw std::invalid_argument("greedy_separated: empty cloud");
  if (!(eps > 0.0)) throw std::invalid_argument("greedy_separated: eps must be positive");
  const OrbitTable table(sys, env, cloud, n);
  SeparatedSet out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    bool separated = true;
    for (auto j : out.indices)
      if (table.within(i, j, eps, /*strict=*/false)) {
        separated = false;
        break;
      }
    if (separated) out.indices.push_back(i);
  }
  const auto ex =
      detail::cloud_resolves_bowen_classes(sys, cloud, n, eps) ? Exactness::exact : Exactness::greedy_lower;
  out.record = CountRecord::from_value(CountKind::sep, static_cast<double>(out.indices.size()), ex, env.id, n, eps);
  return out;
}

/// Greedy cover of the cloud by closed Bowen balls of radius eps centred at
/// cloud points, in index order.
inline CountRecord span_count(const PointCloud& cloud, const FiberedSystem& sys, const BaseTrajectory& env,
                              std::size_t n, double eps) {
  if (cloud.empty()) throw std::invalid_argument("span_count: empty cloud");
  if (!(eps > 0.0)) throw std::invalid_argument("span_count: eps must be positive");
  const OrbitTable table(sys, env, cloud, n);
  std::vector<std::uint8_t> covered(table.size(), 0);
  std::size_t centers = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (covered[i]) continue;
    ++centers;
    for (std::size_t j = i; j < table.size(); ++j)
      if (!covered[j] && table.within(i, j, eps, /*strict=*/false)) covered[j] = 1;
  }
  const auto ex = detail::cloud_resolves_bowen_classes(sys, cloud, n, eps) ? Exactness::exact
                                                                           : Exactness::greedy_upper;
  return CountRecord::from_value(CountKind::span, static_cast<double>(centers), ex, env.id, n, eps);
}

// ---------------------------------------------------------------------------
// Structured (closed-form) separated-set counts

/// Effective sup-metric weight of original coordinate j of the product shift
/// after n steps: the largest weight under which it is seen.
inline double product_shift_weight(const FiberSpace& f, std::size_t j, std::size_t n) {
  const std::size_t pos = j + 1 >= n ? j + 1 - n : 0;
  return f.scale * std::ldexp(1.0, -static_cast<int>(pos));
}

/// Range of (n, eps) where the product-shift formula is exact: coordinates fed
/// by the tent map never weigh more than eps during the first n steps.
inline bool product_shift_formula_valid(const FiberSpace& f, std::size_t n, double eps) {
  const long first_tent = static_cast<long>(f.dimension) - static_cast<long>(n) + 1;
  const double w = f.scale * std::ldexp(1.0, -static_cast<int>(std::max(0L, first_tent)));
  return w <= eps;
}

/// Range where the linear-circle formula is exact: (m_max + 1) eps < scale.
inline bool linear_circle_formula_valid(const FiberedSystem& sys, double eps) {
  return (static_cast<double>(sys.max_multiplier()) + 1.0) * eps < sys.fiber.scale;
}

inline bool has_structured_sep(const FiberedSystem& sys, std::size_t n, double eps) {
  switch (sys.hint) {
    case StructuredHint::symbolic_shift: return sys.is_shift_type_symbolic();
    case StructuredHint::product_shift: return product_shift_formula_valid(sys.fiber, n, eps);
    case StructuredHint::linear_circle:
      return sys.maps.kind == MapKind::circle_multiply && linear_circle_formula_valid(sys, eps);
    case StructuredHint::none: return false;
  }
  return false;
}

/// log of M_{n-1} = m(omega_0) ... m(omega_{n-2}).
inline double log_expansion(const FiberedSystem& sys, const BaseTrajectory& env, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    s += std::log(static_cast<double>(sys.maps.multipliers.at(env.at(static_cast<std::ptrdiff_t>(i)))));
  return s;
}

/// Exact sep(omega, eps, n) for structured systems.
///
/// Symbolic shifts: k^(n+P-1), P = number of positions p with scale 2^-p > eps.
/// Product shift: prod_j ceil(W_j / eps) with W_j the effective Bowen weight.
/// Linear circle maps: the Bowen ball is an arc of radius r = eps / M_{n-1},
/// and at most ceil(1/r) - 1 points fit on the circle pairwise more than r apart.
inline CountRecord structured_sep_count(const FiberedSystem& sys, const BaseTrajectory& env, std::size_t n,
                                        double eps) {
  if (n == 0) throw std::invalid_argument("structured_sep_count: n must be at least 1");
  if (!(eps > 0.0)) throw std::invalid_argument("structured_sep_count: eps must be positive");
  if (!has_structured_sep(sys, n, eps))
    throw std::domain_error("structured_sep_count: no closed form for " + sys.name + " at n = " +
                            std::to_string(n) + ", eps = " + std::to_string(eps));
  double log_count = 0.0;
  switch (sys.hint) {
    case StructuredHint::symbolic_shift: {
      const std::size_t depth = bowen_depth(n, separating_positions(sys.fiber, eps));
      log_count = static_cast<double>(depth) * std::log(static_cast<double>(sys.fiber.alphabet));
      const double value = std::pow(static_cast<double>(sys.fiber.alphabet), static_cast<double>(depth));
      return {CountKind::sep, value, log_count, Exactness::exact, env.id, n, eps,
              std::numeric_limits<double>::quiet_NaN()};
    }
    case StructuredHint::product_shift: {
      double value = 1.0;
      for (std::size_t j = 0; j < sys.fiber.dimension; ++j) {
        const double c = std::max(1.0, std::ceil(product_shift_weight(sys.fiber, j, n) / eps));
        value *= c;
        log_count += std::log(c);
      }
      return {CountKind::sep, value, log_count, Exactness::exact, env.id, n, eps,
              std::numeric_limits<double>::quiet_NaN()};
    }
    case StructuredHint::linear_circle: {
      if (env.horizon() < n) throw std::invalid_argument("structured_sep_count: environment horizon shorter than n");
      // 1/r = M_{n-1} * scale / eps
      const double log_inv_r = log_expansion(sys, env, n) + std::log(sys.fiber.scale / eps);
      if (log_inv_r < 50.0) {
        double expansion = 1.0;  // exact integer product in this range
        for (std::size_t i = 0; i + 1 < n; ++i)
          expansion *= static_cast<double>(sys.maps.multipliers.at(env.at(static_cast<std::ptrdiff_t>(i))));
        const double inv_r = expansion * (sys.fiber.scale / eps);
        const double value = std::max(1.0, std::ceil(inv_r) - 1.0);
        return CountRecord::from_value(CountKind::sep, value, Exactness::exact, env.id, n, eps);
      }
      // beyond 2^72 the -1 and the ceiling are invisible in double precision
      return CountRecord::from_log(CountKind::sep, log_inv_r, Exactness::exact, env.id, n, eps);
    }
    case StructuredHint::none: break;
  }
  throw std::domain_error("structured_sep_count: system has no structured hint");
}

/// Overload for systems whose count does not depend on the environment.
inline CountRecord structured_sep_count(const FiberedSystem& sys, std::size_t n, double eps) {
  if (sys.hint == StructuredHint::linear_circle && sys.base.alphabet_size > 1)
    throw std::invalid_argument("structured_sep_count: random circle maps need an environment");
  BaseTrajectory env;
  env.symbols.assign(n, 0);
  return structured_sep_count(sys, env, n, eps);
}

// ---------------------------------------------------------------------------
// Subcover counts

inline constexpr std::size_t kDefaultMaxMemberships = std::size_t{1} << 24;

namespace detail {

// Point sets (indices into the cloud) of the elements of the iterated cover
// U_0^{n-1} that meet the cloud.  An iterated element is a tuple
// (a_0, ..., a_{n-1}) standing for {x : T^i x in U_{a_i} for all i < n}.
inline std::vector<std::vector<std::uint32_t>> iterated_cover_sets(const FiberedSystem& sys,
                                                                    const BaseTrajectory& env,
                                                                    const CoverSpec& cover, std::size_t n,
                                                                    const PointCloud& cloud,
                                                                    std::size_t max_memberships) {
  if (cover.elements.empty()) throw std::invalid_argument("iterated cover: empty cover");
  const OrbitTable table(sys, env, cloud, n);
  const std::size_t m = table.size();
  std::map<std::vector<std::uint32_t>, std::uint32_t> ids;
  std::vector<std::vector<std::uint32_t>> sets;
  std::size_t memberships = 0;
  std::vector<std::vector<std::uint32_t>> per_step(n);
  for (std::size_t p = 0; p < m; ++p) {
    double combos = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
      per_step[t].clear();
      const FiberPoint y = table.point(p, t);
      for (std::size_t e = 0; e < cover.elements.size(); ++e)
        if (cover.elements[e].contains(sys.fiber, y)) per_step[t].push_back(static_cast<std::uint32_t>(e));
      if (per_step[t].empty())
        throw CoverageError("cover misses cloud point " + std::to_string(p) + " at step " + std::to_string(t), p, t);
      combos *= static_cast<double>(per_step[t].size());
    }
    if (combos > static_cast<double>(max_memberships) ||
        memberships + static_cast<std::size_t>(combos) > max_memberships)
      throw BudgetExceeded("iterated cover needs more than " + std::to_string(max_memberships) + " memberships");
    memberships += static_cast<std::size_t>(combos);
    std::vector<std::size_t> idx(n, 0);
    std::vector<std::uint32_t> tuple(n);
    while (true) {
      for (std::size_t t = 0; t < n; ++t) tuple[t] = per_step[t][idx[t]];
      auto [it, fresh] = ids.emplace(tuple, static_cast<std::uint32_t>(sets.size()));
      if (fresh) sets.emplace_back();
      sets[it->second].push_back(static_cast<std::uint32_t>(p));
      bool done = true;
      for (std::size_t t = n; t-- > 0;) {
        if (++idx[t] < per_step[t].size()) {
          done = false;
          break;
        }
        idx[t] = 0;
      }
      if (done) break;
    }
  }
  return sets;
}

}  // namespace detail

/// Minimal number of elements of the iterated cover U_0^{n-1} needed to cover
/// the cloud; only iterated elements meeting the cloud are built.
inline CountRecord subcover_count(const FiberedSystem& sys, const BaseTrajectory& env, const CoverSpec& cover,
                                  std::size_t n, const PointCloud& cloud,
                                  std::size_t max_memberships = kDefaultMaxMemberships) {
  const auto sets = detail::iterated_cover_sets(sys, env, cover, n, cloud, max_memberships);
  const std::size_t m = cloud.size();
  const auto sol = min_set_cover(sets, m);
  return CountRecord::from_value(CountKind::subcover, static_cast<double>(sol.count),
                                 sol.exact ? Exactness::exact : Exactness::greedy_upper, env.id, n,
                                 cover.diam_cert);
}

inline bool has_structured_subcover(const FiberedSystem& sys, const CoverSpec& cover) {
  return sys.hint == StructuredHint::symbolic_shift && sys.is_shift_type_symbolic() &&
         cover.uniform_cylinder_depth(sys.fiber) >= 0;
}

/// Cylinder partitions of depth q on shift-type symbolic systems: the iterated
/// cover is the partition into cylinders of depth n + q - 1, all of them needed.
inline CountRecord structured_subcover_count(const FiberedSystem& sys, const CoverSpec& cover, std::size_t n,
                                             std::uint64_t omega_id = 0) {
  if (!has_structured_subcover(sys, cover))
    throw std::domain_error("structured_subcover_count: cover is not a full cylinder partition");
  const auto q = static_cast<std::size_t>(cover.uniform_cylinder_depth(sys.fiber));
  const std::size_t depth = bowen_depth(n, q);
  const double logk = std::log(static_cast<double>(sys.fiber.alphabet));
  return {CountKind::subcover, std::pow(static_cast<double>(sys.fiber.alphabet), static_cast<double>(depth)),
          static_cast<double>(depth) * logk, Exactness::exact, omega_id, n, cover.diam_cert,
          std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace rdsmdim
