#include <catch_amalgamated.hpp>

#include <cmath>

#include "rdsmdim/harness.hpp"

using namespace rdsmdim;
using Catch::Approx;

namespace {

SweepConfig full_shift_sweep() {
  SweepConfig cfg;
  cfg.run_id = "t";
  cfg.system.catalog = "full-shift(2)";
  cfg.eps_grid = {0.25, 0.125, 0.0625, 0.03125};
  cfg.n_schedule = {1, 2, 3, 4, 5, 6};
  cfg.num_omega = 2;
  cfg.num_pairs = 8;
  cfg.candidates = {MeasureSpec::bernoulli({0.5, 0.5}), MeasureSpec::bernoulli({0.9, 0.1})};
  cfg.run_suite = false;
  return cfg;
}

CurveEntry entry(double eps, double estimate) {
  CurveEntry e;
  e.epsilon = eps;
  e.estimate = estimate;
  return e;
}

}  // namespace

TEST_CASE("measure labels are canonical") {
  CHECK(measure_label(MeasureSpec::bernoulli({0.5, 0.5})) == "bernoulli(0.5,0.5)");
  CHECK(measure_label(MeasureSpec::bernoulli({0.9, 0.1})) == "bernoulli(0.9,0.1)");
  CHECK(measure_label(MeasureSpec::markov({{0.9, 0.1}, {0.2, 0.8}})) == "markov(0.9,0.1,0.2,0.8)");
  CHECK(measure_label(MeasureSpec::lebesgue()) == "lebesgue");
  CHECK(measure_label(MeasureSpec::empirical(100, 8, 2)) == "empirical(100,8,2)");
  CHECK(measure_label(MeasureSpec::point_mass(FiberPoint::symbolic({0, 1}))) == "point(0,1)");
  auto named = MeasureSpec::lebesgue();
  named.id = "custom";
  CHECK(measure_label(named) == "custom");
}

TEST_CASE("principle names and curve kinds") {
  CHECK(std::string(to_string(Principle::brin_katok)) == "brin-katok");
  CHECK(curve_kind_of(Principle::shapira) == CurveKind::shapira);
  CHECK(curve_kind_from_string("katok") == CurveKind::katok);
}

TEST_CASE("variational gap picks the best candidate per scale") {
  SweepResult r;
  r.topological.entries = {entry(0.5, 1.0), entry(0.25, 1.2)};
  EntropyCurve a, b;
  a.kind = b.kind = CurveKind::katok;
  a.measure_id = "a";
  b.measure_id = "b";
  a.entries = {entry(0.5, 0.4), entry(0.25, 1.1)};
  b.entries = {entry(0.5, 0.9)};
  EntropyCurve other;
  other.kind = CurveKind::ks;
  other.measure_id = "c";
  other.entries = {entry(0.5, 5.0)};
  r.measure_curves = {a, b, other};
  const auto rows = variational_gap(r, Principle::katok);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].best_measure == "b");
  CHECK(rows[0].gap == Approx(0.1));
  CHECK(rows[1].best_measure == "a");
  CHECK(rows[1].gap == Approx(0.1));
  const auto none = variational_gap(r, Principle::shapira);
  CHECK(std::isnan(none[0].measure));
  CHECK(none[0].gap == 1.0);
  CHECK_THROWS_AS(variational_gap(SweepResult{}, Principle::ks), std::invalid_argument);
}

TEST_CASE("suite recorder writes witnesses for violations only") {
  SuiteReport rep;
  detail::SuiteRecorder rec(rep);
  rec.le("c1", "i", "a", 1.0, "b", 2.0);
  rec.le("c2", "i", "a", 3.0, "b", 2.0);
  rec.le("c3", "i", "a", 2.04, "b", 2.0, false, 0.05);
  rec.eq("c4", "i", "a", 4.0, "b", 5.0);
  CHECK(rep.hard_total() == 3);
  CHECK(rep.hard_failed() == 2);
  CHECK(rep.soft_total() == 1);
  CHECK(rep.soft_failed() == 0);
  CHECK(rep.verdicts[0].witness.empty());
  CHECK(rep.verdicts[1].witness == "a = 3 > b = 2");
  CHECK(rep.verdicts[3].witness == "a = 4 != b = 5");
  CHECK_FALSE(rep.all_hard_passed());
}

TEST_CASE("default symbolic suite passes every hard check") {
  const auto rep = default_symbolic_suite(0, false);
  CHECK(rep.instances >= 200);
  CHECK(rep.hard_total() > 1000);
  CHECK(rep.all_hard_passed());
  for (const auto& v : rep.verdicts)
    if (!v.passed) FAIL_CHECK(v.check << " [" << v.instance << "] " << v.witness);
}

TEST_CASE("default suite is stable across seeds") {
  CHECK(default_symbolic_suite(12345, false).all_hard_passed());
}

TEST_CASE("soft checks pass within tolerance") {
  const auto sys = make_system("full-shift(2)");
  auto spec = MeasureSpec::bernoulli({0.7, 0.3});
  spec.id = measure_label(spec);
  SuiteParams p;
  p.n_values = {1, 2};
  p.num_omega = 1;
  const auto rep = inequality_suite(sys, {measure_provider(sys, spec)}, p);
  CHECK(rep.soft_total() > 0);
  CHECK(rep.soft_failed() == 0);
  CHECK(rep.all_hard_passed());
}

TEST_CASE("suite refuses non-symbolic systems with a failing verdict") {
  const auto rep = inequality_suite(make_system("doubling"), {});
  CHECK_FALSE(rep.all_hard_passed());
  CHECK(rep.verdicts.front().check == "suite-applicability");
}

TEST_CASE("full shift sweep closes the variational gap") {
  const auto res = run_sweep(full_shift_sweep());
  CHECK(res.skipped.empty());
  CHECK(res.topological.entries.size() == 4);
  CHECK(res.measure_curves.size() == 8);
  CHECK(res.gaps.size() == 16);
  for (const auto& g : res.gaps) {
    CHECK(g.best_measure == "bernoulli(0.5,0.5)");
    CHECK(std::fabs(g.gap) <= 0.05);
  }
  REQUIRE(res.candidates.size() == 2);
  CHECK(res.candidates[0].invariant_by_construction);
  CHECK(res.mdim.size() == 9);
  // entropy does not grow as eps shrinks; only the topological and KS curves
  // are free of finite-n effects at this short schedule
  for (const auto& m : res.mdim) {
    CHECK(m.available);
    if (m.kind == CurveKind::topological || m.kind == CurveKind::ks)
      CHECK(m.estimate.upper == Approx(0.0).margin(1e-9));
    else
      CHECK(std::fabs(m.estimate.upper) < 0.2);
  }
  CHECK_FALSE(res.suite_ran);
}

TEST_CASE("sweep runs the hard suite on symbolic systems") {
  auto cfg = full_shift_sweep();
  cfg.run_suite = true;
  cfg.principles = {Principle::katok};
  const auto res = run_sweep(cfg);
  CHECK(res.suite_ran);
  CHECK(res.suite.instances > 0);
  CHECK(res.suite.all_hard_passed());
  CHECK(res.suite.soft_total() == 0);
}

TEST_CASE("cells over budget are skipped and reported") {
  SweepConfig cfg;
  cfg.system.catalog = "doubling";
  cfg.eps_grid = {0.05, 0.001};
  cfg.n_schedule = {1, 2, 3};
  cfg.backend = Backend::enumerative;
  cfg.max_cloud_points = 2000;
  cfg.principles = {};
  const auto res = run_sweep(cfg);
  CHECK(res.topological.entries.size() == 1);
  REQUIRE(res.skipped.size() == 1);
  CHECK(res.skipped[0].epsilon == 0.001);
  CHECK_FALSE(res.skipped[0].reason.empty());
  REQUIRE(res.mdim.size() == 1);
  CHECK_FALSE(res.mdim[0].available);
  CHECK_FALSE(res.mdim[0].note.empty());
}

TEST_CASE("sweep configurations are validated") {
  auto cfg = full_shift_sweep();
  cfg.eps_grid = {0.1, 0.2};
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg = full_shift_sweep();
  cfg.num_pairs = 4;
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg = full_shift_sweep();
  cfg.delta_schedule = {0.1, 0.25};
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg = full_shift_sweep();
  cfg.candidates.push_back(MeasureSpec::bernoulli({0.5, 0.5}));
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
}

TEST_CASE("default scale grid") {
  const auto g = default_eps_grid(FiberSpace::symbolic(2));
  CHECK(g == std::vector<double>{0.25, 0.125, 0.0625, 0.03125});
  CHECK(default_eps_grid(FiberSpace::circle()).front() == 0.125);
}

TEST_CASE("sweeps are deterministic") {
  auto cfg = full_shift_sweep();
  cfg.system.catalog = "random-subshift(2,0.5)";
  cfg.seed = 4;
  const auto a = run_sweep(cfg), b = run_sweep(cfg);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].count == b.cells[i].count);
    CHECK(a.cells[i].entropy_slope == b.cells[i].entropy_slope);
  }
}
