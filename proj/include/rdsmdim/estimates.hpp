#pragma once

// Growth rates, entropy curves and metric mean dimension estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "counting.hpp"

namespace rdsmdim {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit ols(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("ols: need two or more paired points");
  const auto m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

enum class GrowthMethod { fixed_n, tail_slope_fit };

inline const char* to_string(GrowthMethod m) { return m == GrowthMethod::fixed_n ? "fixed-n" : "tail-slope-fit"; }

/// Finite-n surrogates of limsup (1/n) log count(n).
struct GrowthEstimate {
  double value = 0.0;       // tail_slope when available, fixed_n otherwise
  GrowthMethod method = GrowthMethod::fixed_n;
  double fixed_n = 0.0;     // log count(n_max) / n_max
  double tail_slope = 0.0;  // OLS slope over the top half of the schedule
  std::vector<std::size_t> n_schedule;
  std::vector<std::pair<std::size_t, double>> raw;  // (n, log count)
  double fit_residual = 0.0;
};

/// The tail is the last ceil(N/2) entries, and never fewer than two.
inline std::size_t tail_start(std::size_t size) {
  const std::size_t tail = std::max<std::size_t>(2, (size + 1) / 2);
  return size > tail ? size - tail : 0;
}

/// Growth rate of a count sequence given as (n, log count) with increasing n.
/// With three or more entries the value is the tail slope; with fewer it is
/// the fixed-n ratio (and tail_slope repeats it).
inline GrowthEstimate growth_rate(std::vector<std::pair<std::size_t, double>> raw) {
  if (raw.empty()) throw std::invalid_argument("growth_rate: no counts");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].first == 0) throw std::invalid_argument("growth_rate: n must be positive");
    if (!(raw[i].second >= -1e-12)) throw std::invalid_argument("growth_rate: zero count (log count below 0)");
    if (i > 0 && raw[i].first <= raw[i - 1].first) throw std::invalid_argument("growth_rate: n schedule not increasing");
  }
  GrowthEstimate g;
  for (const auto& [n, lc] : raw) g.n_schedule.push_back(n);
  g.fixed_n = raw.back().second / static_cast<double>(raw.back().first);
  if (raw.size() >= 3) {
    std::vector<double> xs, ys;
    for (std::size_t i = tail_start(raw.size()); i < raw.size(); ++i) {
      xs.push_back(static_cast<double>(raw[i].first));
      ys.push_back(raw[i].second);
    }
    const auto fit = ols(xs, ys);
    g.tail_slope = fit.slope;
    g.fit_residual = fit.residual;
    g.method = GrowthMethod::tail_slope_fit;
    g.value = g.tail_slope;
  } else {
    g.tail_slope = g.fixed_n;
    g.value = g.fixed_n;
  }
  g.raw = std::move(raw);
  return g;
}

inline GrowthEstimate growth_rate(const std::vector<CountRecord>& counts) {
  std::vector<std::pair<std::size_t, double>> raw;
  for (const auto& c : counts) raw.emplace_back(c.n, c.log_value);
  return growth_rate(std::move(raw));
}

enum class CurveKind { topological, cover, ks, shapira, katok, brin_katok };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::topological: return "topological";
    case CurveKind::cover: return "cover";
    case CurveKind::ks: return "ks";
    case CurveKind::shapira: return "shapira";
    case CurveKind::katok: return "katok";
    case CurveKind::brin_katok: return "brin-katok";
  }
  return "?";
}

inline CurveKind curve_kind_from_string(const std::string& s) {
  for (auto k : {CurveKind::topological, CurveKind::cover, CurveKind::ks, CurveKind::shapira, CurveKind::katok,
                 CurveKind::brin_katok})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown curve kind '" + s + "'");
}

/// One scale of an entropy curve.
struct CurveEntry {
  double epsilon = 0.0;
  double estimate = 0.0;   // P-average (or mu-average) of tail-slope growth rates
  double stderr_ = 0.0;    // standard error of that average
  std::size_t num_omega = 0;
  double fixed_n = 0.0;    // same average of the fixed-n growth rates
  double upper = kNaN;     // limsup-type finite-n surrogate, where defined
  double lower = kNaN;     // liminf-type finite-n surrogate, where defined
  double delta = kNaN;     // delta of the reported value (Shapira, Katok)
  std::vector<std::pair<double, double>> delta_trend;  // (delta, estimate), delta decreasing
  double dispersion = kNaN;  // across-sample standard deviation (Brin-Katok)
  std::string backend;
  Exactness exactness = Exactness::exact;
};

struct EntropyCurve {
  CurveKind kind = CurveKind::topological;
  std::string measure_id;  // empty for the topological side
  std::vector<CurveEntry> entries;
};

/// One (epsilon, n, delta, omega) count as written to the per-cell table.
struct Cell {
  CurveKind kind = CurveKind::topological;
  std::string measure_id;
  double epsilon = 0.0;
  std::size_t n = 0;
  double delta = kNaN;
  std::size_t omega_index = 0;
  double count = 0.0;      // effective count: exp(entropy) for KS, 1/mass for Brin-Katok
  double log_count = 0.0;
  Exactness exactness = Exactness::exact;
  double entropy_fixed_n = 0.0;  // per-sample growth surrogates of the series this cell belongs to
  double entropy_slope = 0.0;
  double stderr_ = 0.0;          // standard error of the curve entry
};

struct CurveResult {
  CurveEntry entry;
  std::vector<Cell> cells;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  double sd = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr r;
  if (v.empty()) return r;
  // Deviations are taken from the first value so that identical samples give
  // a standard deviation of exactly zero.
  const double shift = v.front();
  double offset = 0.0;
  for (double x : v) offset += x - shift;
  offset /= static_cast<double>(v.size());
  r.mean = shift + offset;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - shift - offset) * (x - shift - offset);
    r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    r.stderr_ = r.sd / std::sqrt(static_cast<double>(v.size()));
  }
  return r;
}

/// Appends one cell per (n, count) of a per-sample series.
inline void append_series_cells(std::vector<Cell>& out, CurveKind kind, const std::string& measure_id, double eps,
                                double delta, std::size_t omega_index, const std::vector<CountRecord>& counts,
                                const GrowthEstimate& g) {
  for (const auto& c : counts) {
    Cell cell;
    cell.kind = kind;
    cell.measure_id = measure_id;
    cell.epsilon = eps;
    cell.n = c.n;
    cell.delta = delta;
    cell.omega_index = omega_index;
    cell.count = c.value;
    cell.log_count = c.log_value;
    cell.exactness = c.exactness;
    cell.entropy_fixed_n = g.fixed_n;
    cell.entropy_slope = g.tail_slope;
    out.push_back(std::move(cell));
  }
}

inline void set_cell_stderr(std::vector<Cell>& cells, std::size_t from, double se) {
  for (std::size_t i = from; i < cells.size(); ++i) cells[i].stderr_ = se;
}

/// Weakest exactness tag over a set of counts.
inline Exactness combine(Exactness a, Exactness b) {
  if (a == Exactness::approximate || b == Exactness::approximate) return Exactness::approximate;
  if (a == Exactness::exact) return b;
  if (b == Exactness::exact) return a;
  return a == b ? a : Exactness::greedy_upper;
}

struct MdimEstimate {
  double upper = 0.0;
  double lower = 0.0;
  std::size_t window = 4;
  std::vector<double> per_window_slopes;  // ordered from the largest scales down
};

inline constexpr std::size_t kDefaultMdimWindow = 4;

/// Slopes of estimate against |log eps| over every run of `window`
/// consecutive scales; upper is the largest slope, lower the smallest.
inline MdimEstimate mdim_estimate(const EntropyCurve& curve, std::size_t window = kDefaultMdimWindow) {
  std::vector<std::pair<double, double>> pts;  // (eps, estimate), finite entries only
  for (const auto& e : curve.entries)
    if (std::isfinite(e.estimate) && e.epsilon > 0.0) pts.emplace_back(e.epsilon, e.estimate);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first == pts[i - 1].first) throw std::invalid_argument("mdim_estimate: repeated scale");
  if (pts.size() < 4)
    throw std::invalid_argument("mdim_estimate: need at least 4 scales, curve has " + std::to_string(pts.size()));
  if (window < 2) throw std::invalid_argument("mdim_estimate: window must be at least 2");
  if (window > pts.size())
    throw std::invalid_argument("mdim_estimate: window " + std::to_string(window) + " exceeds the " +
                                std::to_string(pts.size()) + " available scales");
  MdimEstimate est;
  est.window = window;
  for (std::size_t s = 0; s + window <= pts.size(); ++s) {
    std::vector<double> xs, ys;
    for (std::size_t i = s; i < s + window; ++i) {
      xs.push_back(std::fabs(std::log(pts[i].first)));
      ys.push_back(pts[i].second);
    }
    est.per_window_slopes.push_back(ols(xs, ys).slope);
  }
  est.upper = *std::max_element(est.per_window_slopes.begin(), est.per_window_slopes.end());
  est.lower = *std::min_element(est.per_window_slopes.begin(), est.per_window_slopes.end());
  return est;
}

/// Geometric grid eps_max, eps_max * ratio, ... down to eps_min (inclusive up
/// to rounding).
inline std::vector<double> geometric_grid(double eps_max, double eps_min, double ratio = 0.5) {
  if (!(eps_max > 0.0) || !(eps_min > 0.0) || eps_min > eps_max)
    throw std::invalid_argument("geometric_grid: need 0 < eps_min <= eps_max");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("geometric_grid: ratio must lie in (0, 1)");
  std::vector<double> g;
  for (double e = eps_max; e >= eps_min * (1.0 - 1e-12); e *= ratio) g.push_back(e);
  return g;
}

}  // namespace rdsmdim
