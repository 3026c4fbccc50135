#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "counting.hpp"
#include "estimates.hpp"
#include "rng.hpp"

namespace rdsmdim {

enum class Backend { automatic, structured, enumerative };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::automatic: return "auto";
    case Backend::structured: return "structured";
    case Backend::enumerative: return "enumerative";
  }
  return "?";
}

struct TopologicalConfig {
  std::vector<std::size_t> n_schedule{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t num_omega = 32;
  std::uint64_t seed = 0;
  Backend backend = Backend::automatic;
  double mesh_factor = 0.125;  // cloud mesh = eps * mesh_factor on real fibers
  std::size_t max_cloud_points = kDefaultMaxCloudPoints;
  double max_cell_seconds = std::numeric_limits<double>::infinity();
};

/// Number of independent environments actually used: one when the base is
/// deterministic.
inline std::size_t effective_num_omega(const FiberedSystem& sys, std::size_t requested) {
  if (requested == 0) throw std::invalid_argument("num_omega must be at least 1");
  return sys.base.alphabet_size == 1 ? 1 : requested;
}

/// Environment number `index` of a run.  Its symbols depend only on (seed,
/// index), so every scale and every estimator sees the same environments.
inline BaseTrajectory omega_sample(const FiberedSystem& sys, std::uint64_t seed, std::size_t index,
                                   std::size_t horizon) {
  return sample_base(sys, derive_seed(seed, "omega", {index}), horizon);
}

inline void validate_schedule(const std::vector<std::size_t>& ns) {
  if (ns.empty()) throw std::invalid_argument("n schedule is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] == 0) throw std::invalid_argument("n schedule entries must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw std::invalid_argument("n schedule must be strictly increasing");
  }
}

namespace detail {

class CellClock {
 public:
  explicit CellClock(double limit) : limit_(limit), start_(std::chrono::steady_clock::now()) {}
  void check(const std::string& what) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (secs > limit_)
      throw BudgetExceeded(what + " exceeded the per-cell time budget of " + std::to_string(limit_) + " s");
  }

 private:
  double limit_;
  std::chrono::steady_clock::time_point start_;
};

inline bool use_structured_sep(const FiberedSystem& sys, const TopologicalConfig& cfg, double eps) {
  bool ok = true;
  for (auto n : cfg.n_schedule) ok = ok && has_structured_sep(sys, n, eps);
  if (cfg.backend == Backend::structured && !ok)
    throw std::domain_error("structured backend requested but no closed form covers " + sys.name + " at eps = " +
                            std::to_string(eps));
  return ok && cfg.backend != Backend::enumerative;
}

}  // namespace detail

/// P-average of the growth rate of sep(omega, eps, n) over the n schedule.
inline CurveResult eps_topological_entropy(const FiberedSystem& sys, double eps, const TopologicalConfig& cfg) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps_topological_entropy: eps must be positive");
  validate_schedule(cfg.n_schedule);
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const std::size_t n_max = cfg.n_schedule.back();
  const bool structured = detail::use_structured_sep(sys, cfg, eps);
  const detail::CellClock clock(cfg.max_cell_seconds);

  // Real fibers share one grid across environments and n.
  PointCloud shared;
  if (!structured && !sys.fiber.is_symbolic()) {
    try {
      shared = grid_cloud(sys.fiber, eps * cfg.mesh_factor, cfg.max_cloud_points);
    } catch (const BudgetExceeded& e) {
      throw BudgetExceeded(std::string("infeasible cloud for eps = ") + std::to_string(eps) + ": " + e.what());
    }
  }

  CurveResult out;
  out.entry.epsilon = eps;
  out.entry.num_omega = num_omega;
  out.entry.backend = structured ? "structured" : "enumerative";
  std::vector<double> slopes, fixed;
  for (std::size_t w = 0; w < num_omega; ++w) {
    const BaseTrajectory env = omega_sample(sys, cfg.seed, w, n_max + sys.guard);
    std::vector<CountRecord> counts;
    for (auto n : cfg.n_schedule) {
      if (structured) {
        counts.push_back(structured_sep_count(sys, env, n, eps));
      } else if (sys.fiber.is_symbolic()) {
        const std::size_t depth = bowen_depth(n, separating_positions(sys.fiber, eps));
        const auto cloud = cylinder_cloud(sys.fiber, depth, depth + sys.guard, cfg.max_cloud_points);
        counts.push_back(greedy_separated(cloud, sys, env, n, eps).record);
      } else {
        counts.push_back(greedy_separated(shared, sys, env, n, eps).record);
      }
      out.entry.exactness = combine(out.entry.exactness, counts.back().exactness);
      clock.check("topological entropy at eps = " + std::to_string(eps));
    }
    const auto g = growth_rate(counts);
    slopes.push_back(g.tail_slope);
    fixed.push_back(g.fixed_n);
    append_series_cells(out.cells, CurveKind::topological, "", eps, kNaN, w, counts, g);
  }
  const auto ms = mean_stderr(slopes);
  out.entry.estimate = ms.mean;
  out.entry.stderr_ = ms.stderr_;
  out.entry.fixed_n = mean_stderr(fixed).mean;
  set_cell_stderr(out.cells, 0, ms.stderr_);
  return out;
}

/// Entropy curve of the topological side over a grid of scales.
inline EntropyCurve topological_curve(const FiberedSystem& sys, const std::vector<double>& eps_grid,
                                      const TopologicalConfig& cfg, std::vector<Cell>* cells = nullptr) {
  EntropyCurve curve;
  curve.kind = CurveKind::topological;
  for (double eps : eps_grid) {
    auto r = eps_topological_entropy(sys, eps, cfg);
    curve.entries.push_back(r.entry);
    if (cells) cells->insert(cells->end(), r.cells.begin(), r.cells.end());
  }
  return curve;
}

/// P-average of the growth rate of N(T, omega, U, n).
inline CurveResult cover_entropy(const FiberedSystem& sys, const CoverSpec& cover, const TopologicalConfig& cfg) {
  validate_schedule(cfg.n_schedule);
  if (cover.elements.empty()) throw std::invalid_argument("cover_entropy: empty cover");
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const std::size_t n_max = cfg.n_schedule.back();
  bool structured = has_structured_subcover(sys, cover) && cfg.backend != Backend::enumerative;
  if (cfg.backend == Backend::structured && !structured)
    throw std::domain_error("structured backend requested but the cover is not a full cylinder partition");
  const detail::CellClock clock(cfg.max_cell_seconds);

  // depth of cylinder resolving single-step membership in every element
  std::size_t q_max = 0;
  if (sys.fiber.is_symbolic())
    for (const auto& e : cover.elements)
      q_max = std::max(q_max, e.shape == CoverElement::Shape::cylinder ? e.word.size()
                                                                         : open_ball_depth(sys.fiber, e.radius));
  PointCloud shared;
  if (!structured && !sys.fiber.is_symbolic())
    shared = grid_cloud(sys.fiber, cover.diam_cert * cfg.mesh_factor, cfg.max_cloud_points);

  CurveResult out;
  out.entry.epsilon = cover.diam_cert;
  out.entry.num_omega = num_omega;
  out.entry.backend = structured ? "structured" : "enumerative";
  std::vector<double> slopes, fixed;
  for (std::size_t w = 0; w < num_omega; ++w) {
    const BaseTrajectory env = omega_sample(sys, cfg.seed, w, n_max + sys.guard);
    std::vector<CountRecord> counts;
    for (auto n : cfg.n_schedule) {
      if (structured) {
        counts.push_back(structured_subcover_count(sys, cover, n, env.id));
      } else if (sys.fiber.is_symbolic()) {
        const std::size_t depth = std::max<std::size_t>(1, n + q_max);
        const auto cloud = cylinder_cloud(sys.fiber, depth, depth + sys.guard, cfg.max_cloud_points);
        counts.push_back(subcover_count(sys, env, cover, n, cloud));
      } else {
        // Covering only the grid points needs no more elements than covering
        // the fiber, so an exact solve over the grid is a lower bound.
        auto rec = subcover_count(sys, env, cover, n, shared);
        rec.exactness = rec.exactness == Exactness::exact ? Exactness::greedy_lower : Exactness::approximate;
        counts.push_back(rec);
      }
      out.entry.exactness = combine(out.entry.exactness, counts.back().exactness);
      clock.check("cover entropy");
    }
    const auto g = growth_rate(counts);
    slopes.push_back(g.tail_slope);
    fixed.push_back(g.fixed_n);
    append_series_cells(out.cells, CurveKind::cover, cover.label, cover.diam_cert, kNaN, w, counts, g);
  }
  const auto ms = mean_stderr(slopes);
  out.entry.estimate = ms.mean;
  out.entry.stderr_ = ms.stderr_;
  out.entry.fixed_n = mean_stderr(fixed).mean;
  set_cell_stderr(out.cells, 0, ms.stderr_);
  return out;
}

}  // namespace rdsmdim
