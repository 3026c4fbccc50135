#pragma once

// Measure-theoretic epsilon-entropies: Kolmogorov-Sinai over partitions of
// diameter at most eps, Shapira, Katok and Brin-Katok, plus the
// Shannon-McMillan-Breiman diagnostic.
//
// Every count has a closed form for exact Bernoulli/Markov measures on shift
// systems, and for Lebesgue measure on linear circle maps and on the product
// shift where the geometry allows it.  Everything else goes through a finite
// atom surrogate of mu_omega.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "counting.hpp"
#include "cover.hpp"
#include "estimates.hpp"
#include "measure.hpp"
#include "setcover.hpp"
#include "topological.hpp"

namespace rdsmdim {

struct MeasureConfig {
  std::vector<std::size_t> n_schedule{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t num_omega = 32;
  std::uint64_t seed = 0;
  Backend backend = Backend::automatic;
  std::vector<double> delta_schedule{0.25, 0.1, 0.05};
  std::size_t num_pairs = 32;
  std::size_t max_atoms = kDefaultMaxAtoms;
  std::size_t max_cloud_points = kDefaultMaxCloudPoints;
  double max_cell_seconds = std::numeric_limits<double>::infinity();
};

/// Largest number of step distances the atom backends will evaluate for one
/// count (atoms squared times n for Katok).
inline constexpr double kMaxPairWork = 4e8;

inline void validate_delta_schedule(const std::vector<double>& ds) {
  if (ds.empty()) throw std::invalid_argument("delta schedule is empty");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(ds[i] > 0.0 && ds[i] < 1.0)) throw std::invalid_argument("delta values must lie in (0, 1)");
    if (i > 0 && ds[i] >= ds[i - 1]) throw std::invalid_argument("delta schedule must be strictly decreasing");
  }
}

/// An entropy value with the quality of the computation behind it.
struct MeasureValue {
  double value = 0.0;
  Exactness exactness = Exactness::exact;
};

namespace detail {

inline bool symbolic_exact(const FiberMeasure& fm, const FiberedSystem& sys) {
  return fm.kind == MeasureKind::exact_symbolic && sys.is_shift_type_symbolic();
}
inline bool circle_lebesgue(const FiberMeasure& fm, const FiberedSystem& sys) {
  return fm.kind == MeasureKind::exact_product && sys.maps.kind == MapKind::circle_multiply;
}
inline bool product_lebesgue(const FiberMeasure& fm, const FiberedSystem& sys) {
  return fm.kind == MeasureKind::exact_product && sys.maps.kind == MapKind::product_shift_tent;
}

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

inline void check_horizon(const BaseTrajectory& env, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (env.horizon() < n)
    throw std::invalid_argument("environment horizon " + std::to_string(env.horizon()) + " shorter than n = " +
                                std::to_string(n));
}

inline Exactness atom_exactness(const WeightedCloud& a, bool solver_exact, Exactness greedy_tag) {
  if (!a.exact) return Exactness::approximate;
  return solver_exact ? Exactness::exact : greedy_tag;
}

// Expansion factor M_{n-1} of a linear circle system as a double (may be inf).
inline double circle_expansion(const FiberedSystem& sys, const BaseTrajectory& env, std::size_t n) {
  return std::exp(log_expansion(sys, env, n));
}

// Half-width (coordinate units) of the open Bowen ball of a linear circle
// system, valid where linear_circle_formula_valid holds.
inline double circle_ball_log_radius(const FiberedSystem& sys, const BaseTrajectory& env, std::size_t n,
                                     double eps) {
  return std::log(eps / sys.fiber.scale) - log_expansion(sys, env, n);
}

// Atoms for a generic computation that must resolve n steps at scale eps.
inline WeightedCloud generic_atoms(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                                   std::size_t depth, std::size_t n, double eps) {
  double mesh = 0.0;
  if (fm.kind == MeasureKind::exact_product) {
    mesh = eps / 8.0;
    if (sys.maps.kind == MapKind::circle_multiply) mesh /= circle_expansion(sys, env, n);
    if (!(mesh > 0.0) || mesh * static_cast<double>(fm.atom_budget) < sys.fiber.scale)
      throw BudgetExceeded("Lebesgue atoms at eps = " + std::to_string(eps) + ", n = " + std::to_string(n) +
                           " exceed the atom budget of " + std::to_string(fm.atom_budget));
  }
  return fm.atoms(depth, depth + sys.guard, mesh);
}

inline void check_pair_work(std::size_t atoms, std::size_t n) {
  const double work = static_cast<double>(atoms) * static_cast<double>(atoms) * static_cast<double>(n);
  if (work > kMaxPairWork)
    throw BudgetExceeded("pairwise Bowen distances over " + std::to_string(atoms) + " atoms for n = " +
                         std::to_string(n) + " exceed the work budget");
}

// Entropy of the interval partition of [0,1] with the given interior breakpoints.
inline double interval_entropy(std::set<double> cuts) {
  cuts.insert(0.0);
  cuts.insert(1.0);
  double h = 0.0, prev = -1.0;
  for (double c : cuts) {
    if (prev >= 0.0) {
      const double len = c - prev;
      if (len > 0.0) h -= len * std::log(len);
    }
    prev = c;
  }
  return h;
}

// Lebesgue entropy of the n-step join of a grid partition under the product
// shift.  Coordinate i of the starting point sits at a moving position and
// passes through the tent map each time it wraps around, so the join is a
// product over coordinates of interval partitions.
inline double product_shift_join_entropy(const FiberSpace& f, const PartitionSpec& part, std::size_t n,
                                         std::size_t max_breakpoints) {
  const std::size_t D = f.dimension;
  double h = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    std::set<double> cuts;
    std::size_t p = i, wraps = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t c = part.cells_per_axis.at(p);
      if (c > 1) {
        if (wraps > 40 || static_cast<double>(c) * std::ldexp(1.0, static_cast<int>(wraps)) >
                              static_cast<double>(max_breakpoints))
          throw BudgetExceeded("product-shift partition join needs too many breakpoints");
        std::vector<double> level;
        for (std::size_t l = 1; l < c; ++l) level.push_back(static_cast<double>(l) / static_cast<double>(c));
        for (std::size_t a = 0; a < wraps; ++a) {
          std::vector<double> pre;
          pre.reserve(2 * level.size());
          for (double y : level) {
            pre.push_back(0.5 * y);
            pre.push_back(1.0 - 0.5 * y);
          }
          level.swap(pre);
        }
        cuts.insert(level.begin(), level.end());
        if (cuts.size() > max_breakpoints) throw BudgetExceeded("product-shift partition join needs too many breakpoints");
      }
      if (p == 0) p = D - 1, ++wraps;
      else --p;
    }
    h += interval_entropy(std::move(cuts));
  }
  return h;
}

// Half-widths (coordinate units) of the product-shift Bowen box.
inline std::vector<double> product_box_halfwidths(const FiberSpace& f, std::size_t n, double eps) {
  std::vector<double> a(f.dimension);
  for (std::size_t j = 0; j < f.dimension; ++j) a[j] = eps / product_shift_weight(f, j, n);
  return a;
}

// Katok count of Lebesgue measure on the product shift when equal boxes tile
// the cube: every side is at least 1 or divides 1.  Returns false otherwise.
inline bool product_katok_closed_form(const FiberSpace& f, std::size_t n, double eps, double delta, double& log_count,
                                      double& count) {
  double log_k = 0.0, k = 1.0;
  for (double a : product_box_halfwidths(f, n, eps)) {
    const double side = 2.0 * a;
    if (side >= 1.0) continue;
    const double inv = 1.0 / side;
    if (std::fabs(inv - std::round(inv)) > 1e-9 * inv) return false;
    log_k += std::log(std::round(inv));
    k *= std::round(inv);
  }
  if (k < 0x1.0p52) {
    count = smallest_integer_above((1.0 - delta) * k);
    log_count = std::log(count);
  } else {
    log_count = std::log(1.0 - delta) + log_k;
    count = std::exp(log_count);
  }
  return true;
}

// Per-atom exit times: the first step at which the orbit of atom j is at
// distance >= eps from the orbit of x (n when it never is).
inline std::vector<std::size_t> exit_times(const FiberedSystem& sys, const BaseTrajectory& env, const FiberPoint& x,
                                           const PointCloud& cloud, std::size_t n, double eps) {
  const OrbitTable table(sys, env, cloud, n);
  const auto orbit = fiber_iterate(sys, env, x, n).points;
  std::vector<std::size_t> tau(cloud.size(), n);
  for (std::size_t j = 0; j < cloud.size(); ++j)
    for (std::size_t t = 0; t < n; ++t)
      if (!(sys.fiber.distance(orbit[t], table.point(j, t)) < eps)) {
        tau[j] = t;
        break;
      }
  return tau;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Counts and masses on one fiber measure

/// H_{mu_omega} of the join of the partition along n steps of omega.
inline MeasureValue partition_entropy(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                                      const PartitionSpec& part, std::size_t n, Backend backend = Backend::automatic) {
  detail::check_horizon(env, n);
  if (backend != Backend::enumerative) {
    if (detail::symbolic_exact(fm, sys) && part.fiber.is_symbolic())
      return {fm.depth_entropy(bowen_depth(n, part.depth)), Exactness::exact};
    if (detail::circle_lebesgue(fm, sys) && part.cells_per_axis.size() == 1)
      return {std::log(static_cast<double>(part.cells_per_axis[0])) + log_expansion(sys, env, n), Exactness::exact};
    if (detail::product_lebesgue(fm, sys) && part.cells_per_axis.size() == sys.fiber.dimension)
      return {detail::product_shift_join_entropy(sys.fiber, part, n, fm.atom_budget), Exactness::exact};
    if (fm.kind == MeasureKind::point_mass) return {0.0, Exactness::exact};
    if (backend == Backend::structured)
      throw std::domain_error("no closed-form partition entropy for this measure and system");
  }
  const std::size_t depth = part.fiber.is_symbolic() ? bowen_depth(n, part.depth) : 0;
  const auto atoms = detail::generic_atoms(fm, sys, env, depth, n, part.diam_cert);
  const OrbitTable table(sys, env, atoms.cloud, n);
  std::map<std::vector<std::uint64_t>, double> mass;
  std::vector<std::uint64_t> itinerary(n);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t t = 0; t < n; ++t) itinerary[t] = part.label(table.point(i, t));
    mass[itinerary] += atoms.weights[i];
  }
  double h = 0.0;
  for (const auto& [key, m] : mass)
    if (m > 0.0) h -= m * std::log(m);
  return {std::max(h, 0.0), atoms.exact ? Exactness::exact : Exactness::approximate};
}

/// Shapira count: fewest elements of the iterated cover U_0^{n-1} whose union
/// has mu_omega-mass strictly above 1 - delta.
inline CountRecord shapira_count(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                                 const CoverSpec& cover, std::size_t n, double delta,
                                 Backend backend = Backend::automatic) {
  detail::check_delta(delta);
  detail::check_horizon(env, n);
  if (cover.elements.empty()) throw std::invalid_argument("shapira_count: empty cover");
  auto record = [&](const LogCount& c, Exactness ex) {
    CountRecord r = CountRecord::from_log(CountKind::shapira, c.log_value, ex, env.id, n, cover.diam_cert, delta);
    r.value = c.value;
    return r;
  };
  if (backend != Backend::enumerative) {
    if (detail::symbolic_exact(fm, sys) && has_structured_subcover(sys, cover)) {
      const auto q = static_cast<std::size_t>(cover.uniform_cylinder_depth(sys.fiber));
      return record(fm.min_cylinders_exceeding(bowen_depth(n, q), 1.0 - delta), Exactness::exact);
    }
    if (fm.kind == MeasureKind::point_mass) return record({1.0, 0.0}, Exactness::exact);
    if (backend == Backend::structured) throw std::domain_error("no closed-form Shapira count for this instance");
  }
  std::size_t q_max = 0;
  if (sys.fiber.is_symbolic())
    for (const auto& e : cover.elements)
      q_max = std::max(q_max, e.shape == CoverElement::Shape::cylinder ? e.word.size()
                                                                         : open_ball_depth(sys.fiber, e.radius));
  const auto atoms = detail::generic_atoms(fm, sys, env, std::max<std::size_t>(1, bowen_depth(n, q_max)), n,
                                           cover.leb_cert > 0.0 ? cover.leb_cert : cover.diam_cert);
  const auto sets = detail::iterated_cover_sets(sys, env, cover, n, atoms.cloud, kDefaultMaxMemberships);
  const auto sol = min_mass_cover(sets, atoms.weights, 1.0 - delta);
  return CountRecord::from_value(CountKind::shapira, static_cast<double>(sol.count),
                                 detail::atom_exactness(atoms, sol.exact, Exactness::greedy_upper), env.id, n,
                                 cover.diam_cert, delta);
}

/// Katok count: fewest open (n, eps) Bowen balls whose union has
/// mu_omega-mass strictly above 1 - delta.  Centres range over the measure's
/// atoms, which is exact for cylinder geometry.
inline CountRecord katok_count(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                               std::size_t n, double eps, double delta, Backend backend = Backend::automatic) {
  detail::check_delta(delta);
  detail::check_horizon(env, n);
  if (!(eps > 0.0)) throw std::invalid_argument("katok_count: eps must be positive");
  auto record = [&](const LogCount& c, Exactness ex) {
    CountRecord r = CountRecord::from_log(CountKind::katok, c.log_value, ex, env.id, n, eps, delta);
    r.value = c.value;
    return r;
  };
  if (backend != Backend::enumerative) {
    if (detail::symbolic_exact(fm, sys))
      return record(fm.min_cylinders_exceeding(bowen_depth(n, open_ball_depth(sys.fiber, eps)), 1.0 - delta),
                    Exactness::exact);
    if (detail::circle_lebesgue(fm, sys) && linear_circle_formula_valid(sys, eps)) {
      // the Bowen ball is an arc of half-width r; disjoint arcs tile the circle
      const double log_2r = std::log(2.0) + detail::circle_ball_log_radius(sys, env, n, eps);
      if (log_2r >= 0.0) return record({1.0, 0.0}, Exactness::exact);
      const double inv = std::exp(-log_2r);
      if (inv < 0x1.0p52) {
        LogCount c;
        c.add(smallest_integer_above((1.0 - delta) * inv));
        return record(c, Exactness::exact);
      }
      return record({std::exp(std::log(1.0 - delta) - log_2r), std::log(1.0 - delta) - log_2r}, Exactness::exact);
    }
    if (detail::product_lebesgue(fm, sys) && product_shift_formula_valid(sys.fiber, n, eps)) {
      double lc = 0.0, c = 0.0;
      if (detail::product_katok_closed_form(sys.fiber, n, eps, delta, lc, c)) return record({c, lc}, Exactness::exact);
    }
    if (fm.kind == MeasureKind::point_mass) return record({1.0, 0.0}, Exactness::exact);
    if (backend == Backend::structured) throw std::domain_error("no closed-form Katok count for this instance");
  }
  const std::size_t depth =
      sys.fiber.is_symbolic() ? std::max<std::size_t>(1, bowen_depth(n, open_ball_depth(sys.fiber, eps))) : 0;
  const auto atoms = detail::generic_atoms(fm, sys, env, depth, n, eps);
  detail::check_pair_work(atoms.cloud.size(), n);
  const OrbitTable table(sys, env, atoms.cloud, n);
  std::vector<std::vector<std::uint32_t>> sets(table.size());
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table.size(); ++j)
      if (table.within(i, j, eps, /*strict=*/true)) sets[i].push_back(static_cast<std::uint32_t>(j));
  const auto sol = min_mass_cover(sets, atoms.weights, 1.0 - delta);
  return CountRecord::from_value(CountKind::katok, static_cast<double>(sol.count),
                                 detail::atom_exactness(atoms, sol.exact, Exactness::greedy_upper), env.id, n, eps,
                                 delta);
}

/// log mu_omega(B_n(x, eps)) for the open Bowen ball.
inline MeasureValue bowen_ball_log_mass(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                                        const FiberPoint& x, std::size_t n, double eps,
                                        Backend backend = Backend::automatic) {
  detail::check_horizon(env, n);
  if (!(eps > 0.0)) throw std::invalid_argument("bowen_ball_mass: eps must be positive");
  if (!sys.fiber.contains(x)) throw std::invalid_argument("bowen_ball_mass: point outside the fiber");
  if (backend != Backend::enumerative) {
    if (detail::symbolic_exact(fm, sys)) {
      const std::size_t depth = bowen_depth(n, open_ball_depth(sys.fiber, eps));
      if (x.word.size() < depth)
        throw std::invalid_argument("bowen_ball_mass: word of length " + std::to_string(x.word.size()) +
                                    " is shorter than the ball depth " + std::to_string(depth));
      return {fm.log_cylinder_mass(std::span<const std::uint8_t>(x.word.data(), depth)), Exactness::exact};
    }
    if (detail::circle_lebesgue(fm, sys) && linear_circle_formula_valid(sys, eps)) {
      const double log_2r = std::log(2.0) + detail::circle_ball_log_radius(sys, env, n, eps);
      return {std::min(0.0, log_2r), Exactness::exact};
    }
    if (detail::product_lebesgue(fm, sys) && product_shift_formula_valid(sys.fiber, n, eps)) {
      const auto a = detail::product_box_halfwidths(sys.fiber, n, eps);
      double lm = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double len = std::min(1.0, x.coords[j] + a[j]) - std::max(0.0, x.coords[j] - a[j]);
        lm += std::log(len);
      }
      return {lm, Exactness::exact};
    }
    if (fm.kind == MeasureKind::point_mass) {
      const bool inside = bowen_distance(sys, env, x, fm.support.cloud.points.at(0), n) < eps;
      return {inside ? 0.0 : -std::numeric_limits<double>::infinity(), Exactness::exact};
    }
    if (backend == Backend::structured) throw std::domain_error("no closed-form Bowen ball mass for this instance");
  }
  const std::size_t depth =
      sys.fiber.is_symbolic() ? std::max<std::size_t>(1, bowen_depth(n, open_ball_depth(sys.fiber, eps))) : 0;
  auto atoms = detail::generic_atoms(fm, sys, env, depth, n, eps);
  FiberPoint xx = x;
  if (sys.fiber.is_symbolic()) xx.word.resize(atoms.cloud.points.at(0).word.size(), 0);
  const auto tau = detail::exit_times(sys, env, xx, atoms.cloud, n, eps);
  double m = 0.0;
  for (std::size_t j = 0; j < tau.size(); ++j)
    if (tau[j] >= n) m += atoms.weights[j];
  return {std::log(m), atoms.exact ? Exactness::exact : Exactness::approximate};
}

inline double bowen_ball_mass(const FiberMeasure& fm, const FiberedSystem& sys, const BaseTrajectory& env,
                              const FiberPoint& x, std::size_t n, double eps, Backend backend = Backend::automatic) {
  return std::exp(bowen_ball_log_mass(fm, sys, env, x, n, eps, backend).value);
}

// Convenience overloads on the disintegrated measure.
inline MeasureValue partition_entropy(const DisintegratedMeasure& mu, const FiberedSystem& sys,
                                      const BaseTrajectory& env, const PartitionSpec& part, std::size_t n,
                                      Backend backend = Backend::automatic) {
  return partition_entropy(mu.at(sys, env), sys, env, part, n, backend);
}
inline CountRecord shapira_count(const DisintegratedMeasure& mu, const FiberedSystem& sys, const BaseTrajectory& env,
                                 const CoverSpec& cover, std::size_t n, double delta,
                                 Backend backend = Backend::automatic) {
  return shapira_count(mu.at(sys, env), sys, env, cover, n, delta, backend);
}
inline CountRecord katok_count(const DisintegratedMeasure& mu, const FiberedSystem& sys, const BaseTrajectory& env,
                               std::size_t n, double eps, double delta, Backend backend = Backend::automatic) {
  return katok_count(mu.at(sys, env), sys, env, n, eps, delta, backend);
}
inline double bowen_ball_mass(const DisintegratedMeasure& mu, const FiberedSystem& sys, const BaseTrajectory& env,
                              const FiberPoint& x, std::size_t n, double eps, Backend backend = Backend::automatic) {
  return bowen_ball_mass(mu.at(sys, env), sys, env, x, n, eps, backend);
}

// ---------------------------------------------------------------------------
// Entropy curves

namespace detail {

// Symbols of environment needed beyond n: cylinder depths on symbolic
// fibers, plus the guard.
inline std::size_t measure_horizon(const FiberedSystem& sys, std::size_t n_max, double eps) {
  std::size_t extra = sys.guard;
  if (sys.fiber.is_symbolic()) extra += separating_positions(sys.fiber, eps / 8.0) + 2;
  return n_max + extra;
}

inline FiberMeasure fiber_measure(const DisintegratedMeasure& mu, const FiberedSystem& sys, const BaseTrajectory& env,
                                  const MeasureConfig& cfg) {
  FiberMeasure fm = mu.at(sys, env);
  fm.atom_budget = cfg.max_atoms;
  return fm;
}

// Counts of exact symbolic measures do not depend on omega: letter rotations
// permute cylinders without changing the multiset of their masses.
inline bool omega_free_counts(const DisintegratedMeasure& mu, const FiberedSystem& sys, Backend backend) {
  return mu.kind() == MeasureKind::exact_symbolic && sys.is_shift_type_symbolic() && backend != Backend::enumerative;
}

struct SeriesSummary {
  double upper = 0.0;  // max over the tail of (1/n) log count
  double lower = 0.0;  // min over the tail
};

inline SeriesSummary tail_extremes(const std::vector<CountRecord>& counts) {
  SeriesSummary s{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (std::size_t i = tail_start(counts.size()); i < counts.size(); ++i) {
    const double r = counts[i].log_value / static_cast<double>(counts[i].n);
    s.upper = std::max(s.upper, r);
    s.lower = std::min(s.lower, r);
  }
  return s;
}

// Shared driver of the Shapira and Katok curves: for each delta and omega, a
// count series over n.  `count` computes one count.
template <class CountFn>
CurveResult delta_curve(const FiberedSystem& sys, const DisintegratedMeasure& mu, double eps, CurveKind kind,
                        const MeasureConfig& cfg, bool omega_free, CountFn count) {
  validate_schedule(cfg.n_schedule);
  validate_delta_schedule(cfg.delta_schedule);
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const std::size_t n_max = cfg.n_schedule.back();
  const CellClock clock(cfg.max_cell_seconds);
  CurveResult out;
  out.entry.epsilon = eps;
  out.entry.num_omega = num_omega;
  std::map<std::pair<std::size_t, double>, CountRecord> cache;
  std::vector<FiberMeasure> fms;
  std::vector<BaseTrajectory> envs;
  for (std::size_t w = 0; w < num_omega; ++w) {
    envs.push_back(omega_sample(sys, cfg.seed, w, measure_horizon(sys, n_max, eps)));
    fms.push_back(fiber_measure(mu, sys, envs.back(), cfg));
  }
  for (std::size_t di = 0; di < cfg.delta_schedule.size(); ++di) {
    const double delta = cfg.delta_schedule[di];
    const std::size_t first_cell = out.cells.size();
    std::vector<double> slopes, fixed, uppers, lowers;
    for (std::size_t w = 0; w < num_omega; ++w) {
      std::vector<CountRecord> counts;
      for (auto n : cfg.n_schedule) {
        CountRecord r;
        const auto key = std::make_pair(n, delta);
        if (omega_free && cache.count(key)) {
          r = cache.at(key);
        } else {
          r = count(fms[w], envs[w], n, delta);
          if (omega_free) cache.emplace(key, r);
        }
        r.omega_id = envs[w].id;
        counts.push_back(r);
        out.entry.exactness = combine(out.entry.exactness, r.exactness);
        clock.check(std::string(to_string(kind)) + " entropy at eps = " + std::to_string(eps));
      }
      const auto g = growth_rate(counts);
      slopes.push_back(g.tail_slope);
      fixed.push_back(g.fixed_n);
      const auto ex = tail_extremes(counts);
      uppers.push_back(ex.upper);
      lowers.push_back(ex.lower);
      append_series_cells(out.cells, kind, mu.id(), eps, delta, w, counts, g);
    }
    const auto ms = mean_stderr(slopes);
    set_cell_stderr(out.cells, first_cell, ms.stderr_);
    out.entry.delta_trend.emplace_back(delta, ms.mean);
    if (di + 1 == cfg.delta_schedule.size()) {
      out.entry.estimate = ms.mean;
      out.entry.stderr_ = ms.stderr_;
      out.entry.fixed_n = mean_stderr(fixed).mean;
      out.entry.upper = mean_stderr(uppers).mean;
      out.entry.lower = mean_stderr(lowers).mean;
      out.entry.delta = delta;
    }
  }
  return out;
}

inline std::string measure_backend_label(const CurveEntry& e) {
  return e.exactness == Exactness::approximate ? "atoms" : "closed-form";
}

}  // namespace detail

/// P-average of the growth rate of H_{mu_omega}(join of the partition).
inline CurveResult ks_eps_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, const PartitionSpec& part,
                                  const MeasureConfig& cfg, double eps_label = kNaN) {
  validate_schedule(cfg.n_schedule);
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const std::size_t n_max = cfg.n_schedule.back();
  const double eps = std::isnan(eps_label) ? part.diam_cert : eps_label;
  const detail::CellClock clock(cfg.max_cell_seconds);
  CurveResult out;
  out.entry.epsilon = eps;
  out.entry.num_omega = num_omega;
  std::vector<double> slopes, fixed, uppers, lowers;
  for (std::size_t w = 0; w < num_omega; ++w) {
    const BaseTrajectory env = omega_sample(sys, cfg.seed, w, detail::measure_horizon(sys, n_max, part.diam_cert));
    const FiberMeasure fm = detail::fiber_measure(mu, sys, env, cfg);
    std::vector<CountRecord> counts;
    for (auto n : cfg.n_schedule) {
      const auto h = partition_entropy(fm, sys, env, part, n, cfg.backend);
      const double log_card = std::log(part.cell_count()) * static_cast<double>(n);
      if (h.value > log_card + 1e-9)
        throw std::logic_error("partition entropy exceeds the log of the number of join cells");
      CountRecord r = CountRecord::from_log(CountKind::sep, h.value, h.exactness, env.id, n, eps);
      counts.push_back(r);
      out.entry.exactness = combine(out.entry.exactness, h.exactness);
      clock.check("KS entropy at eps = " + std::to_string(eps));
    }
    const auto g = growth_rate(counts);
    slopes.push_back(g.tail_slope);
    fixed.push_back(g.fixed_n);
    const auto ex = detail::tail_extremes(counts);
    uppers.push_back(ex.upper);
    lowers.push_back(ex.lower);
    append_series_cells(out.cells, CurveKind::ks, mu.id(), eps, kNaN, w, counts, g);
  }
  const auto ms = mean_stderr(slopes);
  out.entry.estimate = ms.mean;
  out.entry.stderr_ = ms.stderr_;
  out.entry.fixed_n = mean_stderr(fixed).mean;
  out.entry.upper = mean_stderr(uppers).mean;
  out.entry.lower = mean_stderr(lowers).mean;
  out.entry.backend = detail::measure_backend_label(out.entry);
  set_cell_stderr(out.cells, 0, ms.stderr_);
  return out;
}

/// KS epsilon-entropy with the canonical grid partition of diameter <= eps.
inline CurveResult ks_eps_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, double eps,
                                  const MeasureConfig& cfg) {
  return ks_eps_entropy(sys, mu, PartitionSpec::grid(sys.fiber, eps), cfg, eps);
}

/// Shapira entropy of a given cover.
inline CurveResult shapira_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, const CoverSpec& cover,
                                   const MeasureConfig& cfg, double eps_label = kNaN) {
  const double eps = std::isnan(eps_label) ? cover.diam_cert : eps_label;
  auto out = detail::delta_curve(sys, mu, eps, CurveKind::shapira, cfg, detail::omega_free_counts(mu, sys, cfg.backend),
                                 [&](const FiberMeasure& fm, const BaseTrajectory& env, std::size_t n, double delta) {
                                   return shapira_count(fm, sys, env, cover, n, delta, cfg.backend);
                                 });
  out.entry.backend = detail::measure_backend_label(out.entry);
  return out;
}

/// Shapira epsilon-entropy with the canonical net cover at eps.
inline CurveResult shapira_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, double eps,
                                   const MeasureConfig& cfg) {
  return shapira_entropy(sys, mu, net_cover(sys.fiber, eps, cfg.max_cloud_points), cfg, eps);
}

inline CurveResult katok_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, double eps,
                                 const MeasureConfig& cfg) {
  auto out = detail::delta_curve(sys, mu, eps, CurveKind::katok, cfg, detail::omega_free_counts(mu, sys, cfg.backend),
                                 [&](const FiberMeasure& fm, const BaseTrajectory& env, std::size_t n, double delta) {
                                   return katok_count(fm, sys, env, n, eps, delta, cfg.backend);
                                 });
  out.entry.backend = detail::measure_backend_label(out.entry);
  return out;
}

/// One sampled (omega, x) pair of the Brin-Katok estimator.
struct LocalEntropySample {
  std::size_t omega_index = 0;
  FiberPoint x;
  std::vector<std::size_t> n_schedule;
  std::vector<double> log_masses;  // log mu_omega(B_n(x, eps)), non-increasing in n
  double estimate = 0.0;           // tail slope of -log mass
  double upper_est = 0.0;          // max over the tail of -(1/n) log mass
  double lower_est = 0.0;          // min over the tail
};

struct BrinKatokResult {
  CurveResult curve;
  std::vector<LocalEntropySample> samples;
};

/// mu-average of the local entropy at scale eps over sampled (omega, x)
/// pairs, with the across-pair standard deviation as dispersion.
inline BrinKatokResult brin_katok_entropy(const FiberedSystem& sys, const DisintegratedMeasure& mu, double eps,
                                          const MeasureConfig& cfg) {
  validate_schedule(cfg.n_schedule);
  if (cfg.num_pairs < 8) throw std::invalid_argument("brin_katok_entropy: num_pairs must be at least 8");
  const std::size_t n_max = cfg.n_schedule.back();
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const detail::CellClock clock(cfg.max_cell_seconds);
  const std::size_t horizon = detail::measure_horizon(sys, n_max, eps);
  const std::size_t word_length = horizon;
  BrinKatokResult res;
  CurveResult& out = res.curve;
  out.entry.epsilon = eps;
  out.entry.num_omega = num_omega;
  std::vector<double> slopes, fixed, uppers, lowers;
  std::map<std::size_t, std::pair<BaseTrajectory, FiberMeasure>> measures;  // by omega index
  for (std::size_t p = 0; p < cfg.num_pairs; ++p) {
    const std::size_t w = p % num_omega;
    if (!measures.count(w)) {
      auto env = omega_sample(sys, cfg.seed, w, horizon);
      auto fm = detail::fiber_measure(mu, sys, env, cfg);
      measures.emplace(w, std::make_pair(std::move(env), std::move(fm)));
    }
    const auto& [env, fm] = measures.at(w);
    Rng rng(derive_seed(cfg.seed, "brin-katok-point", {p}));
    LocalEntropySample s;
    s.omega_index = w;
    s.x = fm.sample(rng, word_length);
    s.n_schedule = cfg.n_schedule;
    std::vector<CountRecord> counts;
    for (auto n : cfg.n_schedule) {
      const auto lm = bowen_ball_log_mass(fm, sys, env, s.x, n, eps, cfg.backend);
      if (!(lm.value > -std::numeric_limits<double>::infinity()))
        throw std::runtime_error("Bowen ball of zero mass at n = " + std::to_string(n) +
                                 "; the measure is too sparse at eps = " + std::to_string(eps) +
                                 ", refine it (more atoms)");
      s.log_masses.push_back(lm.value);
      CountRecord r = CountRecord::from_log(CountKind::katok, -lm.value, lm.exactness, env.id, n, eps);
      counts.push_back(r);
      out.entry.exactness = combine(out.entry.exactness, lm.exactness);
      clock.check("Brin-Katok entropy at eps = " + std::to_string(eps));
    }
    const auto g = growth_rate(counts);
    const auto ex = detail::tail_extremes(counts);
    s.estimate = g.tail_slope;
    s.upper_est = ex.upper;
    s.lower_est = ex.lower;
    slopes.push_back(g.tail_slope);
    fixed.push_back(g.fixed_n);
    uppers.push_back(ex.upper);
    lowers.push_back(ex.lower);
    append_series_cells(out.cells, CurveKind::brin_katok, mu.id(), eps, kNaN, p, counts, g);
    res.samples.push_back(std::move(s));
  }
  const auto ms = mean_stderr(slopes);
  out.entry.estimate = ms.mean;
  out.entry.stderr_ = ms.stderr_;
  out.entry.dispersion = ms.sd;
  out.entry.fixed_n = mean_stderr(fixed).mean;
  out.entry.upper = mean_stderr(uppers).mean;
  out.entry.lower = mean_stderr(lowers).mean;
  out.entry.backend = detail::measure_backend_label(out.entry);
  set_cell_stderr(out.cells, 0, ms.stderr_);
  return res;
}

// ---------------------------------------------------------------------------
// Shannon-McMillan-Breiman diagnostic

struct SmbReport {
  double reference_entropy = 0.0;  // entropy rate of the partition process
  std::size_t n = 0;               // largest n of the schedule
  std::vector<double> deviations;  // per pair, at n
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
};

/// Deviation of -(1/n) log mu_omega(A^n(x)) from the entropy rate, where
/// A^n(x) is the cell of the n-step join containing x.  Needs an exact
/// symbolic measure and a cylinder partition.
inline SmbReport smb_diagnostic(const FiberedSystem& sys, const DisintegratedMeasure& mu, const PartitionSpec& xi,
                                const std::vector<std::size_t>& n_schedule, std::size_t num_pairs,
                                std::uint64_t seed) {
  validate_schedule(n_schedule);
  if (mu.kind() != MeasureKind::exact_symbolic || !sys.is_shift_type_symbolic() || !xi.fiber.is_symbolic())
    throw std::domain_error("smb_diagnostic needs an exact symbolic measure and a cylinder partition");
  if (num_pairs == 0) throw std::invalid_argument("smb_diagnostic: num_pairs must be positive");
  SmbReport rep;
  rep.n = n_schedule.back();
  const auto& spec = mu.spec;
  rep.reference_entropy = spec.transition.empty() ? detail::entropy_of(spec.letter_law)
                                                  : BaseProcess::markov(spec.letter_law, spec.transition).entropy_rate();
  if (xi.depth == 0) rep.reference_entropy = 0.0;
  const std::size_t depth = bowen_depth(rep.n, xi.depth);
  const std::size_t num_omega = effective_num_omega(sys, num_pairs);
  double sum = 0.0;
  for (std::size_t p = 0; p < num_pairs; ++p) {
    const auto env = omega_sample(sys, seed, p % num_omega, depth + sys.guard);
    const FiberMeasure fm = mu.at(sys, env);
    Rng rng(derive_seed(seed, "smb-point", {p}));
    const FiberPoint x = fm.sample(rng, depth);
    // -(1/n) log mass, with the rate taken per letter of the depth-length word
    const double rate =
        depth == 0 ? 0.0 : fm.log_cylinder_mass_rate(std::span<const std::uint8_t>(x.word.data(), depth));
    const double dev = std::fabs(-rate * static_cast<double>(depth) / static_cast<double>(rep.n) -
                                 rep.reference_entropy);
    rep.deviations.push_back(dev);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    sum += dev;
  }
  rep.mean_deviation = sum / static_cast<double>(num_pairs);
  return rep;
}

// ---------------------------------------------------------------------------
// Invariance diagnostic

namespace detail {

// Lebesgue mass of T_s^{-1}(box) for the catalog maps, box given per axis.
inline double lebesgue_preimage_mass(const FiberedSystem& sys, std::uint32_t symbol,
                                     const std::vector<std::pair<double, double>>& box) {
  if (sys.maps.kind == MapKind::circle_multiply) {
    const double m = static_cast<double>(sys.maps.multipliers.at(symbol));
    double total = 0.0;
    for (std::uint32_t j = 0; j < sys.maps.multipliers.at(symbol); ++j)
      total += (box[0].second + j) / m - (box[0].first + j) / m;
    return total;
  }
  // (x_1, ..., x_{D-1}, tent(x_0)) in box: x_{j+1} in I_j, tent(x_0) in I_{D-1}
  const std::size_t D = box.size();
  const auto& last = box[D - 1];
  // tent^{-1}[a, b] = [a/2, b/2] u [1 - b/2, 1 - a/2]
  double mass = (last.second / 2.0 - last.first / 2.0) + ((1.0 - last.first / 2.0) - (1.0 - last.second / 2.0));
  for (std::size_t j = 0; j + 1 < D; ++j) mass *= box[j].second - box[j].first;
  return mass;
}

// Dyadic test panel on a real fiber: arcs of the circle, or boxes refining
// the first (at most two) axes of a cube.
inline std::vector<std::vector<std::pair<double, double>>> dyadic_panel(const FiberSpace& f, std::size_t level) {
  std::vector<std::vector<std::pair<double, double>>> panel;
  const std::size_t axes = f.kind == FiberKind::circle ? 1 : std::min<std::size_t>(2, f.dimension);
  const std::size_t dims = f.kind == FiberKind::circle ? 1 : f.dimension;
  const std::size_t cells = std::size_t{1} << level;
  std::size_t total = 1;
  for (std::size_t a = 0; a < axes; ++a) total *= cells;
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<std::pair<double, double>> box(dims, {0.0, 1.0});
    std::size_t rest = c;
    for (std::size_t a = 0; a < axes; ++a) {
      const std::size_t l = rest % cells;
      rest /= cells;
      box[a] = {std::ldexp(static_cast<double>(l), -static_cast<int>(level)),
                std::ldexp(static_cast<double>(l + 1), -static_cast<int>(level))};
    }
    panel.push_back(std::move(box));
  }
  return panel;
}

inline bool in_box(const FiberPoint& x, const std::vector<std::pair<double, double>>& box) {
  for (std::size_t a = 0; a < box.size(); ++a) {
    const bool top = box[a].second >= 1.0;
    if (x.coords[a] < box[a].first || (top ? x.coords[a] > 1.0 : x.coords[a] >= box[a].second)) return false;
  }
  return true;
}

}  // namespace detail

/// Largest discrepancy |mu_{theta omega}(C) - mu_omega(T_omega^{-1} C)| over
/// test sets C (cylinders, or dyadic arcs and boxes, up to test_depth),
/// averaged over sampled environments.  Zero signals invariance at the
/// resolution of the panel.
inline double invariance_diagnostic(const DisintegratedMeasure& mu, const FiberedSystem& sys, std::size_t test_depth,
                                    std::size_t num_envs = 8, std::uint64_t seed = 0) {
  if (test_depth == 0) throw std::invalid_argument("invariance_diagnostic: test_depth must be positive");
  const std::size_t envs = effective_num_omega(sys, num_envs);
  double total = 0.0;
  for (std::size_t w = 0; w < envs; ++w) {
    const BaseTrajectory env = omega_sample(sys, seed, w, test_depth + 2 + sys.guard);
    const FiberMeasure now = mu.at(sys, env);
    const FiberMeasure next = mu.at(sys, env.shifted(1));
    const std::uint32_t s0 = env.at(0);
    double worst = 0.0;
    if (mu.kind() == MeasureKind::exact_symbolic) {
      const std::size_t k = sys.fiber.alphabet;
      const std::uint32_t r = sys.maps.rotations.at(s0) % static_cast<std::uint32_t>(k);
      for (std::size_t L = 1; L <= test_depth; ++L) {
        const auto words = cylinder_cloud(sys.fiber, L, L, mu.atom_budget);
        std::vector<std::uint8_t> pre(L + 1);
        for (const auto& c : words.points) {
          // T^{-1}[w] = union over a of [a, w - r]
          for (std::size_t i = 0; i < L; ++i) pre[i + 1] = static_cast<std::uint8_t>((c.word[i] + k - r) % k);
          double rhs = 0.0;
          for (std::size_t a = 0; a < k; ++a) {
            pre[0] = static_cast<std::uint8_t>(a);
            rhs += now.cylinder_mass(pre);
          }
          worst = std::max(worst, std::fabs(next.cylinder_mass(c.word) - rhs));
        }
      }
    } else if (mu.kind() == MeasureKind::exact_product) {
      for (std::size_t L = 1; L <= test_depth; ++L)
        for (const auto& box : detail::dyadic_panel(sys.fiber, L)) {
          double lhs = 1.0;
          for (const auto& [a, b] : box) lhs *= b - a;
          worst = std::max(worst, std::fabs(lhs - detail::lebesgue_preimage_mass(sys, s0, box)));
        }
    } else {
      const std::size_t wl = test_depth + sys.guard;
      auto before = now.atoms(test_depth, wl);
      const auto after = next.atoms(test_depth, wl);
      for (auto& p : before.cloud.points) sys.apply_in_place(s0, p);
      auto mass_of = [&](const WeightedCloud& a, auto&& member) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.cloud.size(); ++i)
          if (member(a.cloud.points[i])) m += a.weights[i];
        return m;
      };
      for (std::size_t L = 1; L <= test_depth; ++L) {
        if (sys.fiber.is_symbolic()) {
          // masses of depth-L cylinders by prefix label
          std::map<std::vector<std::uint8_t>, double> m0, m1;
          for (std::size_t i = 0; i < before.cloud.size(); ++i) {
            const auto& w = before.cloud.points[i].word;
            m0[std::vector<std::uint8_t>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(std::min(L, w.size())))] +=
                before.weights[i];
          }
          for (std::size_t i = 0; i < after.cloud.size(); ++i) {
            const auto& w = after.cloud.points[i].word;
            m1[std::vector<std::uint8_t>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(std::min(L, w.size())))] +=
                after.weights[i];
          }
          for (const auto& [key, m] : m0) worst = std::max(worst, std::fabs(m - (m1.count(key) ? m1.at(key) : 0.0)));
          for (const auto& [key, m] : m1) worst = std::max(worst, std::fabs(m - (m0.count(key) ? m0.at(key) : 0.0)));
        } else {
          for (const auto& box : detail::dyadic_panel(sys.fiber, L)) {
            auto member = [&](const FiberPoint& x) { return detail::in_box(x, box); };
            worst = std::max(worst, std::fabs(mass_of(after, member) - mass_of(before, member)));
          }
        }
      }
    }
    total += worst;
  }
  return total / static_cast<double>(envs);
}

}  // namespace rdsmdim
