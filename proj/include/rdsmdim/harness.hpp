#pragma once

// Sweeps over (eps, n, delta, omega), variational gaps, and the exact
// inequality suites.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "counting.hpp"
#include "cover.hpp"
#include "estimates.hpp"
#include "measure.hpp"
#include "measure_entropy.hpp"
#include "system.hpp"
#include "topological.hpp"

namespace rdsmdim {

enum class Principle { ks, shapira, katok, brin_katok };

inline const char* to_string(Principle p) {
  switch (p) {
    case Principle::ks: return "ks";
    case Principle::shapira: return "shapira";
    case Principle::katok: return "katok";
    case Principle::brin_katok: return "brin-katok";
  }
  return "?";
}

inline CurveKind curve_kind_of(Principle p) {
  switch (p) {
    case Principle::ks: return CurveKind::ks;
    case Principle::shapira: return CurveKind::shapira;
    case Principle::katok: return CurveKind::katok;
    case Principle::brin_katok: return CurveKind::brin_katok;
  }
  return CurveKind::ks;
}

inline constexpr Principle kAllPrinciples[] = {Principle::ks, Principle::shapira, Principle::katok,
                                               Principle::brin_katok};

struct SweepConfig {
  std::string run_id = "run";
  SystemSpec system;
  std::vector<double> eps_grid;  // strictly decreasing
  std::vector<std::size_t> n_schedule{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> delta_schedule{0.25, 0.1, 0.05};
  std::size_t num_omega = 32;
  std::size_t num_pairs = 32;
  std::vector<MeasureSpec> candidates;
  std::vector<Principle> principles{kAllPrinciples, kAllPrinciples + 4};
  Backend backend = Backend::automatic;
  std::uint64_t seed = 0;
  std::size_t max_cloud_points = kDefaultMaxCloudPoints;
  std::size_t max_atoms = kDefaultMaxAtoms;
  double max_cell_seconds = std::numeric_limits<double>::infinity();
  std::size_t mdim_window = kDefaultMdimWindow;
  bool run_suite = true;

  void validate() const {
    if (eps_grid.empty()) throw std::invalid_argument("eps grid is empty");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
      if (!(eps_grid[i] > 0.0)) throw std::invalid_argument("eps values must be positive");
      if (i > 0 && eps_grid[i] >= eps_grid[i - 1]) throw std::invalid_argument("eps grid must be strictly decreasing");
    }
    validate_schedule(n_schedule);
    validate_delta_schedule(delta_schedule);
    if (num_omega == 0) throw std::invalid_argument("num_omega must be positive");
    if (num_pairs < 8) throw std::invalid_argument("num_pairs must be at least 8");
    if (max_cloud_points == 0 || max_atoms == 0 || !(max_cell_seconds > 0.0))
      throw std::invalid_argument("budgets must be positive");
    if (mdim_window < 2) throw std::invalid_argument("mdim window must be at least 2");
  }

  TopologicalConfig topological_config() const {
    TopologicalConfig t;
    t.n_schedule = n_schedule;
    t.num_omega = num_omega;
    t.seed = seed;
    t.backend = backend;
    t.max_cloud_points = max_cloud_points;
    t.max_cell_seconds = max_cell_seconds;
    return t;
  }

  MeasureConfig measure_config() const {
    MeasureConfig m;
    m.n_schedule = n_schedule;
    m.num_omega = num_omega;
    m.seed = seed;
    m.backend = backend;
    m.delta_schedule = delta_schedule;
    m.num_pairs = num_pairs;
    m.max_atoms = max_atoms;
    m.max_cloud_points = max_cloud_points;
    m.max_cell_seconds = max_cell_seconds;
    return m;
  }
};

/// The default scale grid: ratio 1/2 from a quarter of the fiber diameter
/// down to an eighth of that.
inline std::vector<double> default_eps_grid(const FiberSpace& f) {
  const double top = f.diameter() / 4.0;
  return geometric_grid(top, top / 8.0, 0.5);
}

struct SkippedCell {
  CurveKind kind = CurveKind::topological;
  std::string measure_id;
  double epsilon = 0.0;
  std::string reason;
};

struct MdimRow {
  CurveKind kind = CurveKind::topological;
  std::string measure_id;
  bool available = false;
  MdimEstimate estimate;
  std::string note;  // why the estimate is missing
};

struct GapRow {
  Principle principle = Principle::ks;
  double epsilon = 0.0;
  double topological = 0.0;
  double measure = kNaN;  // best candidate; NaN when no candidate has a value
  std::string best_measure;
  double gap = 0.0;       // topological minus measure, or the topological value when measure is absent
  double stderr_ = 0.0;   // combined standard error of the two sides
};

struct CandidateInfo {
  std::string id;
  MeasureKind kind = MeasureKind::exact_symbolic;
  std::string ergodic;
  bool invariant_by_construction = false;
};

struct CheckVerdict {
  std::string check;
  bool hard = true;
  bool passed = true;
  std::string instance;
  std::string witness;  // the violated comparison, empty on success
};

struct SuiteReport {
  std::vector<CheckVerdict> verdicts;
  std::size_t instances = 0;

  std::size_t count(bool hard, bool failed_only) const {
    return static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(), [&](const CheckVerdict& v) {
      return v.hard == hard && (!failed_only || !v.passed);
    }));
  }
  std::size_t hard_total() const { return count(true, false); }
  std::size_t hard_failed() const { return count(true, true); }
  std::size_t soft_total() const { return count(false, false); }
  std::size_t soft_failed() const { return count(false, true); }
  bool all_hard_passed() const { return hard_failed() == 0; }

  void append(const SuiteReport& other) {
    verdicts.insert(verdicts.end(), other.verdicts.begin(), other.verdicts.end());
    instances += other.instances;
  }
};

struct SweepResult {
  std::string run_id;
  std::string system;
  std::uint64_t seed = 0;
  EntropyCurve topological;
  std::vector<EntropyCurve> measure_curves;
  std::vector<MdimRow> mdim;
  std::vector<GapRow> gaps;
  std::vector<Cell> cells;
  std::vector<SkippedCell> skipped;
  std::vector<CandidateInfo> candidates;
  SuiteReport suite;
  bool suite_ran = false;

  const EntropyCurve* find_curve(CurveKind kind, const std::string& measure_id) const {
    if (kind == CurveKind::topological) return &topological;
    for (const auto& c : measure_curves)
      if (c.kind == kind && c.measure_id == measure_id) return &c;
    return nullptr;
  }
};

/// Canonical identifier of a candidate measure.
inline std::string measure_label(const MeasureSpec& spec) {
  if (!spec.id.empty()) return spec.id;
  std::ostringstream os;
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, v[i]);  // shortest round-trip form
      os << (i ? "," : "") << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    }
  };
  switch (spec.kind) {
    case MeasureKind::exact_symbolic:
      if (spec.transition.empty()) {
        os << "bernoulli(";
        list(spec.letter_law);
      } else {
        os << "markov(";
        for (std::size_t r = 0; r < spec.transition.size(); ++r) {
          if (r) os << ",";
          list(spec.transition[r]);
        }
      }
      os << ")";
      break;
    case MeasureKind::exact_product: os << "lebesgue"; break;
    case MeasureKind::empirical:
      os << "empirical(" << spec.sample_size << "," << spec.burn_in << "," << spec.condition_length << ")";
      break;
    case MeasureKind::point_mass:
      os << "point(";
      if (!spec.point.word.empty())
        for (std::size_t i = 0; i < spec.point.word.size(); ++i) os << (i ? "," : "") << int(spec.point.word[i]);
      else
        list(spec.point.coords);
      os << ")";
      break;
  }
  return os.str();
}

/// gap(eps) = topological side minus the best candidate of the principle.
/// Without any candidate value the measure side is reported absent and the
/// gap equals the topological value.
inline std::vector<GapRow> variational_gap(const SweepResult& sweep, Principle principle) {
  if (sweep.topological.entries.empty()) throw std::invalid_argument("variational_gap: sweep has no topological curve");
  std::vector<GapRow> rows;
  for (const auto& top : sweep.topological.entries) {
    GapRow row;
    row.principle = principle;
    row.epsilon = top.epsilon;
    row.topological = top.estimate;
    double best_se = 0.0;
    for (const auto& curve : sweep.measure_curves) {
      if (curve.kind != curve_kind_of(principle)) continue;
      for (const auto& e : curve.entries)
        if (e.epsilon == top.epsilon && std::isfinite(e.estimate) && (std::isnan(row.measure) || e.estimate > row.measure)) {
          row.measure = e.estimate;
          row.best_measure = curve.measure_id;
          best_se = e.stderr_;
        }
    }
    row.gap = std::isnan(row.measure) ? top.estimate : top.estimate - row.measure;
    row.stderr_ = std::sqrt(top.stderr_ * top.stderr_ + best_se * best_se);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Inequality suite

struct SuiteParams {
  std::vector<std::size_t> n_values{1, 2, 3, 4};
  std::vector<double> eps_values{0.5, 0.25};
  std::vector<double> deltas{0.25, 0.1};
  std::size_t num_omega = 2;
  std::uint64_t seed = 0;
  bool soft = true;
  std::vector<std::size_t> soft_n_schedule{125, 250, 500, 1000, 2000};
  double soft_tolerance = 0.05;
  std::size_t max_enumerated_atoms = 4096;  // cross-validation against atoms above this is skipped
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

class SuiteRecorder {
 public:
  explicit SuiteRecorder(SuiteReport& r) : report_(r) {}

  void le(const std::string& check, const std::string& instance, const std::string& lhs_name, double lhs,
          const std::string& rhs_name, double rhs, bool hard = true, double tol = 0.0) {
    CheckVerdict v;
    v.check = check;
    v.hard = hard;
    v.instance = instance;
    v.passed = lhs <= rhs + tol;
    if (!v.passed) v.witness = lhs_name + " = " + fmt(lhs) + " > " + rhs_name + " = " + fmt(rhs);
    report_.verdicts.push_back(std::move(v));
  }

  void eq(const std::string& check, const std::string& instance, const std::string& lhs_name, double lhs,
          const std::string& rhs_name, double rhs) {
    CheckVerdict v;
    v.check = check;
    v.instance = instance;
    v.passed = lhs == rhs;
    if (!v.passed) v.witness = lhs_name + " = " + fmt(lhs) + " != " + rhs_name + " = " + fmt(rhs);
    report_.verdicts.push_back(std::move(v));
  }

  void fail(const std::string& check, const std::string& instance, const std::string& why) {
    report_.verdicts.push_back({check, true, false, instance, why});
  }

 private:
  SuiteReport& report_;
};

inline PointCloud suite_cloud(const FiberedSystem& sys, std::size_t depth) {
  return cylinder_cloud(sys.fiber, depth, depth + sys.guard);
}

// Topological checks at one (omega, n, eps): the covering chain, the
// span/sep sandwich, structured against enumerative counts, subadditivity.
inline void topological_checks(const FiberedSystem& sys, const BaseTrajectory& env, std::size_t n, double eps,
                               const std::string& inst, SuiteRecorder& rec) {
  const auto& f = sys.fiber;
  auto sep_enum = [&](double e, std::size_t steps, const BaseTrajectory& en) {
    const auto cloud = suite_cloud(sys, bowen_depth(steps, separating_positions(f, e)));
    return greedy_separated(cloud, sys, en, steps, e).record;
  };
  auto span_enum = [&](double e, std::size_t depth) {
    return span_count(suite_cloud(sys, depth), sys, env, n, e);
  };

  // span(eps) <= sep(eps) <= span(eps/2), all on a cloud resolving eps/2
  const std::size_t fine = std::max<std::size_t>(1, bowen_depth(n, separating_positions(f, eps / 2.0)));
  const auto sp = span_enum(eps, fine);
  const auto sp2 = span_enum(eps / 2.0, fine);
  const auto se = sep_enum(eps, n, env);
  rec.le("span<=sep", inst, "span(eps)", sp.value, "sep(eps)", se.value);
  rec.le("sep<=span(eps/2)", inst, "sep(eps)", se.value, "span(eps/2)", sp2.value);
  if (se.exactness != Exactness::exact || sp.exactness != Exactness::exact || sp2.exactness != Exactness::exact)
    rec.fail("sandwich-exactness", inst, "a count of the sandwich is not exact");

  // structured sep against the enumeration
  if (has_structured_sep(sys, n, eps)) {
    const auto st = structured_sep_count(sys, env, n, eps);
    rec.eq("sep-structured==enumerative", inst, "structured", st.value, "enumerative", se.value);
  }

  // covering chain for the net cover and the cylinder cover
  std::vector<CoverSpec> covers;
  if (eps <= f.diameter()) covers.push_back(net_cover(f, eps));
  covers.push_back(cylinder_cover(f, std::max<std::size_t>(1, separating_positions(f, eps))));
  for (const auto& cover : covers) {
    const std::string ci = inst + " cover=" + cover.label;
    std::size_t q_max = 0;
    for (const auto& e : cover.elements)
      q_max = std::max(q_max, e.shape == CoverElement::Shape::cylinder ? e.word.size() : open_ball_depth(f, e.radius));
    const auto sub = subcover_count(sys, env, cover, n, suite_cloud(sys, bowen_depth(n, q_max)));
    if (sub.exactness != Exactness::exact) rec.fail("subcover-exactness", ci, "subcover count is not exact");
    const auto lo = sep_enum(cover.diam_cert, n, env);
    const auto hi = sep_enum(cover.leb_cert, n, env);
    rec.le("sep(diam)<=subcover", ci, "sep(diam_cert)", lo.value, "subcover", sub.value);
    rec.le("subcover<=sep(leb)", ci, "subcover", sub.value, "sep(leb_cert)", hi.value);
    if (has_structured_subcover(sys, cover))
      rec.eq("subcover-structured==enumerative", ci, "structured", structured_subcover_count(sys, cover, n).value,
             "enumerative", sub.value);
    // N(n + m) <= N(n) N(m) at the shifted environment, with m = n
    const auto whole = subcover_count(sys, env, cover, 2 * n, suite_cloud(sys, bowen_depth(2 * n, q_max)));
    const auto tail = subcover_count(sys, env.shifted(n), cover, n, suite_cloud(sys, bowen_depth(n, q_max)));
    if (whole.exactness == Exactness::exact && tail.exactness == Exactness::exact)
      rec.le("subadditivity", ci, "N(2n)", whole.value, "N(n) N(n; theta^n omega)", sub.value * tail.value);
  }
}

// Measure checks at one (omega, n, eps, delta).
inline void measure_checks(const FiberedSystem& sys, const FiberMeasure& fm, const BaseTrajectory& env, std::size_t n,
                           double eps, double delta, const SuiteParams& params, const std::string& inst,
                           SuiteRecorder& rec) {
  const auto& f = sys.fiber;
  const auto k1 = katok_count(fm, sys, env, n, eps, delta);
  const auto k4 = katok_count(fm, sys, env, n, eps / 4.0, delta);
  const auto cover = net_cover(f, eps);
  const auto sh = shapira_count(fm, sys, env, cover, n, delta);
  if (cover.diam_cert < eps) rec.le("katok<=shapira", inst, "katok(eps)", k1.value, "shapira(net(eps))", sh.value);
  else rec.fail("katok<=shapira", inst, "net cover diameter certificate is not below eps");
  rec.le("shapira<=katok(eps/4)", inst, "shapira(net(eps))", sh.value, "katok(eps/4)", k4.value);

  // smaller delta never needs fewer balls
  const auto k1_small = katok_count(fm, sys, env, n, eps, delta / 2.0);
  rec.le("katok-monotone-delta", inst, "katok(delta)", k1.value, "katok(delta/2)", k1_small.value);

  // closed forms against enumeration over atoms, when small enough
  auto small = [&](double e) {
    const double depth = static_cast<double>(bowen_depth(n, open_ball_depth(f, e)));
    return std::pow(static_cast<double>(f.alphabet), depth) <= static_cast<double>(params.max_enumerated_atoms);
  };
  if (small(eps)) {
    rec.eq("katok-structured==enumerative", inst, "structured", k1.value, "enumerative",
           katok_count(fm, sys, env, n, eps, delta, Backend::enumerative).value);
    rec.eq("shapira-structured==enumerative", inst, "structured", sh.value, "enumerative",
           shapira_count(fm, sys, env, cover, n, delta, Backend::enumerative).value);
  }
}

}  // namespace detail

/// Exact inequality checks on a symbolic shift system and exact measures.
/// HARD checks compare exact integer counts.  SOFT checks compare entropy
/// estimates within a tolerance.
inline SuiteReport inequality_suite(const FiberedSystem& sys, const std::vector<DisintegratedMeasure>& measures,
                                    const SuiteParams& params = {}) {
  SuiteReport report;
  detail::SuiteRecorder rec(report);
  if (!sys.is_shift_type_symbolic()) {
    rec.fail("suite-applicability", sys.name, "exact inequality suites need a symbolic shift system");
    return report;
  }
  const std::size_t num_omega = effective_num_omega(sys, params.num_omega);
  std::size_t n_max = 0;
  for (auto n : params.n_values) n_max = std::max(n_max, n);
  for (std::size_t w = 0; w < num_omega; ++w) {
    const BaseTrajectory env = omega_sample(sys, params.seed, w, 2 * n_max + 16 + sys.guard);
    for (auto n : params.n_values) {
      for (double eps : params.eps_values) {
        const std::string base_inst = sys.name + " omega=" + std::to_string(w) + " n=" + std::to_string(n) +
                                      " eps=" + detail::fmt(eps);
        detail::topological_checks(sys, env, n, eps, base_inst, rec);
        for (const auto& mu : measures) {
          if (mu.kind() != MeasureKind::exact_symbolic) continue;
          const FiberMeasure fm = mu.at(sys, env);
          for (double delta : params.deltas) {
            const std::string inst = base_inst + " mu=" + mu.id() + " delta=" + detail::fmt(delta);
            detail::measure_checks(sys, fm, env, n, eps, delta, params, inst, rec);
            ++report.instances;
          }
        }
      }
      // degenerate scale above the diameter: every count collapses to 1
      const double big = 2.0 * sys.fiber.diameter();
      const std::string inst = sys.name + " omega=" + std::to_string(w) + " n=" + std::to_string(n) + " eps>diam";
      const auto cloud = detail::suite_cloud(sys, std::max<std::size_t>(1, n));
      rec.eq("degenerate-sep", inst, "sep", greedy_separated(cloud, sys, env, n, big).record.value, "1", 1.0);
      rec.eq("degenerate-span", inst, "span", span_count(cloud, sys, env, n, big).value, "1", 1.0);
      for (const auto& mu : measures) {
        if (mu.kind() != MeasureKind::exact_symbolic) continue;
        rec.eq("degenerate-katok", inst + " mu=" + mu.id(), "katok",
               katok_count(mu.at(sys, env), sys, env, n, big, params.deltas.front()).value, "1", 1.0);
      }
      ++report.instances;
    }
  }

  if (params.soft) {
    // Long schedules are tractable only through the Bernoulli type classes.
    for (const auto& mu : measures) {
      if (mu.kind() != MeasureKind::exact_symbolic || !mu.spec.transition.empty()) continue;
      MeasureConfig mc;
      mc.n_schedule = params.soft_n_schedule;
      mc.num_omega = num_omega;
      mc.seed = params.seed;
      mc.delta_schedule = {0.25, 0.1, 0.05};
      for (double eps : params.eps_values) {
        const std::string inst = sys.name + " mu=" + mu.id() + " eps=" + detail::fmt(eps);
        const double bk = brin_katok_entropy(sys, mu, eps, mc).curve.entry.estimate;
        const double ks = ks_eps_entropy(sys, mu, eps, mc).entry.estimate;
        if (2.0 * eps <= sys.fiber.diameter()) {
          const double k2 = katok_entropy(sys, mu, 2.0 * eps, mc).entry.estimate;
          rec.le("katok(2eps)<=bk(eps)", inst, "katok(2eps)", k2, "bk(eps)", bk, false, params.soft_tolerance);
        }
        rec.le("bk<=ks", inst, "bk(eps)", bk, "ks(eps)", ks, false, params.soft_tolerance);
        TopologicalConfig tc;
        tc.n_schedule = params.soft_n_schedule;
        tc.num_omega = num_omega;
        tc.seed = params.seed;
        const double h = eps_topological_entropy(sys, eps, tc).entry.estimate;
        const double h4 = eps_topological_entropy(sys, eps / 4.0, tc).entry.estimate;
        const double hc = cover_entropy(sys, net_cover(sys.fiber, eps), tc).entry.estimate;
        rec.le("h(eps)<=cover(net(eps))", inst, "h(eps)", h, "cover entropy", hc, false, params.soft_tolerance);
        rec.le("cover(net(eps))<=h(eps/4)", inst, "cover entropy", hc, "h(eps/4)", h4, false, params.soft_tolerance);
        rec.le("measure<=topological", inst, "ks(eps)", ks, "h(eps)", h, false, params.soft_tolerance);
      }
    }
  }
  return report;
}

/// The default symbolic instance grid: full shifts on two and three letters
/// and the random subshift, with Bernoulli and Markov candidates.
inline SuiteReport default_symbolic_suite(std::uint64_t seed = 0, bool soft = true) {
  struct Case {
    const char* system;
    std::vector<MeasureSpec> measures;
    std::vector<double> eps;
  };
  const std::vector<Case> cases = {
      {"full-shift(2)", {MeasureSpec::bernoulli({0.5, 0.5}), MeasureSpec::bernoulli({0.7, 0.3})}, {0.5, 0.25, 0.125}},
      {"random-subshift(2,0.5)",
       {MeasureSpec::bernoulli({0.6, 0.4}), MeasureSpec::markov({{0.9, 0.1}, {0.2, 0.8}})},
       {0.5, 0.25, 0.125}},
      {"full-shift(3)", {MeasureSpec::bernoulli({1.0 / 3, 1.0 / 3, 1.0 / 3})}, {0.5, 0.25}},
  };
  SuiteReport total;
  for (const auto& c : cases) {
    const auto sys = make_system(c.system);
    std::vector<DisintegratedMeasure> ms;
    for (auto spec : c.measures) {
      spec.id = measure_label(spec);
      ms.push_back(measure_provider(sys, spec, seed));
    }
    SuiteParams p;
    p.eps_values = c.eps;
    p.num_omega = 3;
    p.seed = seed;
    p.soft = soft;
    total.append(inequality_suite(sys, ms, p));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sweep

/// All curves on the shared eps grid, the variational gaps and mdim slopes.
/// Cells over budget are skipped and listed, never downscaled.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const FiberedSystem sys = make_system(cfg.system);
  SweepResult res;
  res.run_id = cfg.run_id;
  res.system = sys.name;
  res.seed = cfg.seed;

  std::vector<DisintegratedMeasure> measures;
  for (auto spec : cfg.candidates) {
    spec.id = measure_label(spec);
    for (const auto& m : measures)
      if (m.id() == spec.id) throw std::invalid_argument("candidate measure '" + spec.id + "' listed twice");
    measures.push_back(measure_provider(sys, spec, derive_seed(cfg.seed, "measure", {measures.size()}), cfg.max_atoms));
    const auto& m = measures.back();
    res.candidates.push_back({m.id(), m.kind(), m.ergodic, m.invariant_by_construction});
  }

  const auto tcfg = cfg.topological_config();
  const auto mcfg = cfg.measure_config();
  res.topological.kind = CurveKind::topological;
  for (double eps : cfg.eps_grid) {
    try {
      auto r = eps_topological_entropy(sys, eps, tcfg);
      res.topological.entries.push_back(r.entry);
      res.cells.insert(res.cells.end(), r.cells.begin(), r.cells.end());
    } catch (const BudgetExceeded& e) {
      res.skipped.push_back({CurveKind::topological, "", eps, e.what()});
    }
  }

  for (const auto& mu : measures) {
    for (auto principle : cfg.principles) {
      EntropyCurve curve;
      curve.kind = curve_kind_of(principle);
      curve.measure_id = mu.id();
      for (double eps : cfg.eps_grid) {
        try {
          CurveResult r;
          switch (principle) {
            case Principle::ks: r = ks_eps_entropy(sys, mu, eps, mcfg); break;
            case Principle::shapira: r = shapira_entropy(sys, mu, eps, mcfg); break;
            case Principle::katok: r = katok_entropy(sys, mu, eps, mcfg); break;
            case Principle::brin_katok: r = brin_katok_entropy(sys, mu, eps, mcfg).curve; break;
          }
          curve.entries.push_back(r.entry);
          res.cells.insert(res.cells.end(), r.cells.begin(), r.cells.end());
        } catch (const BudgetExceeded& e) {
          res.skipped.push_back({curve.kind, mu.id(), eps, e.what()});
        }
      }
      res.measure_curves.push_back(std::move(curve));
    }
  }

  auto add_mdim = [&](const EntropyCurve& c) {
    MdimRow row;
    row.kind = c.kind;
    row.measure_id = c.measure_id;
    try {
      row.estimate = mdim_estimate(c, cfg.mdim_window);
      row.available = true;
    } catch (const std::invalid_argument& e) {
      row.note = e.what();
      row.estimate.window = cfg.mdim_window;
    }
    res.mdim.push_back(std::move(row));
  };
  add_mdim(res.topological);
  for (const auto& c : res.measure_curves) add_mdim(c);

  if (!res.topological.entries.empty())
    for (auto principle : cfg.principles) {
      auto rows = variational_gap(res, principle);
      res.gaps.insert(res.gaps.end(), rows.begin(), rows.end());
    }

  if (cfg.run_suite && sys.is_shift_type_symbolic()) {
    SuiteParams p;
    p.n_values = {1, 2, 3};
    p.eps_values = {0.5 * sys.fiber.scale, 0.25 * sys.fiber.scale};
    p.num_omega = 2;
    p.seed = cfg.seed;
    p.soft = false;
    res.suite = inequality_suite(sys, measures, p);
    res.suite_ran = true;
  }
  return res;
}

}  // namespace rdsmdim
