#include <catch_amalgamated.hpp>

#include <cmath>

#include "rdsmdim/topological.hpp"

using namespace rdsmdim;
using Catch::Approx;

namespace {

const double kLog2 = std::log(2.0);

TopologicalConfig small_config(std::size_t n_max, std::size_t num_omega = 2) {
  TopologicalConfig c;
  c.n_schedule.clear();
  for (std::size_t n = 1; n <= n_max; ++n) c.n_schedule.push_back(n);
  c.num_omega = num_omega;
  return c;
}

EntropyCurve synthetic_curve(const std::vector<double>& eps, double dim) {
  EntropyCurve c;
  for (double e : eps) {
    CurveEntry entry;
    entry.epsilon = e;
    entry.estimate = dim * std::fabs(std::log(e)) + 0.3;
    c.entries.push_back(entry);
  }
  return c;
}

}  // namespace

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> xs{1, 2, 3, 4}, ys{3, 5, 7, 9};
  const auto fit = ols(xs, ys);
  CHECK(fit.slope == Approx(2.0));
  CHECK(fit.intercept == Approx(1.0));
  CHECK(fit.residual == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(ols(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("growth rate uses the tail of the schedule") {
  CHECK(tail_start(8) == 4);
  CHECK(tail_start(3) == 1);
  CHECK(tail_start(2) == 0);
  // log count = 2 + 0.5 n: the tail slope ignores the offset, fixed-n does not
  std::vector<std::pair<std::size_t, double>> raw;
  for (std::size_t n = 1; n <= 8; ++n) raw.emplace_back(n, 2.0 + 0.5 * static_cast<double>(n));
  const auto g = growth_rate(raw);
  CHECK(g.method == GrowthMethod::tail_slope_fit);
  CHECK(g.tail_slope == Approx(0.5));
  CHECK(g.fixed_n == Approx(6.0 / 8.0));
  const auto two = growth_rate({{1, 1.0}, {2, 3.0}});
  CHECK(two.method == GrowthMethod::fixed_n);
  CHECK(two.value == Approx(1.5));
  CHECK_THROWS_AS(growth_rate({{2, 1.0}, {1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(growth_rate({{1, -1.0}}), std::invalid_argument);
}

TEST_CASE("mean and standard error") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_stderr(v);
  CHECK(ms.mean == Approx(2.5));
  CHECK(ms.sd == Approx(std::sqrt(5.0 / 3.0)));
  CHECK(ms.stderr_ == Approx(std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> same(7, 0.1);
  CHECK(mean_stderr(same).sd == 0.0);
  CHECK(mean_stderr(same).mean == 0.1);
}

TEST_CASE("mean dimension slopes of a synthetic curve") {
  const auto grid = geometric_grid(0.25, 0.25 / 64.0);
  REQUIRE(grid.size() == 7);
  const auto est = mdim_estimate(synthetic_curve(grid, 1.5));
  CHECK(est.upper == Approx(1.5));
  CHECK(est.lower == Approx(1.5));
  CHECK(est.per_window_slopes.size() == 4);
  CHECK_THROWS_AS(mdim_estimate(synthetic_curve({0.5, 0.25, 0.125}, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(mdim_estimate(synthetic_curve(grid, 1.0), 8), std::invalid_argument);
}

TEST_CASE("geometric grid endpoints") {
  const auto g = geometric_grid(0.5, 0.0625);
  CHECK(g == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
  CHECK_THROWS_AS(geometric_grid(0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(geometric_grid(0.5, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("full shift entropy is log k at every scale") {
  for (std::size_t k : {2, 3}) {
    const auto sys = make_system("full-shift(" + std::to_string(k) + ")");
    for (double eps : {0.5, 0.25, 0.3}) {
      const auto r = eps_topological_entropy(sys, eps, small_config(6));
      CHECK(r.entry.estimate == Approx(std::log(static_cast<double>(k))));
      CHECK(r.entry.exactness == Exactness::exact);
      CHECK(r.entry.backend == "structured");
    }
  }
}

TEST_CASE("structured and enumerative backends agree on symbolic systems") {
  for (const char* name : {"full-shift(2)", "random-subshift(2,0.5)"}) {
    const auto sys = make_system(name);
    auto cfg = small_config(5, 3);
    cfg.backend = Backend::structured;
    const auto a = eps_topological_entropy(sys, 0.25, cfg);
    cfg.backend = Backend::enumerative;
    const auto b = eps_topological_entropy(sys, 0.25, cfg);
    CHECK(b.entry.backend == "enumerative");
    CHECK(a.entry.estimate == Approx(b.entry.estimate));
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].count == b.cells[i].count);
  }
}

TEST_CASE("doubling entropy from the closed form and from a grid") {
  const auto sys = make_system("doubling");
  auto cfg = small_config(10, 1);
  const auto s = eps_topological_entropy(sys, 0.05, cfg);
  CHECK(s.entry.backend == "structured");
  CHECK(s.entry.estimate == Approx(kLog2).epsilon(0.02));
  // a grid scan is a lower bound, and the grid saturates once Bowen balls
  // shrink below its mesh
  cfg.backend = Backend::enumerative;
  cfg.n_schedule = {1, 2, 3, 4, 5, 6};
  const auto g = eps_topological_entropy(sys, 0.05, cfg);
  CHECK(g.entry.exactness == Exactness::greedy_lower);
  for (const auto& cell : g.cells) {
    const auto env = omega_sample(sys, 0, 0, 8);
    CHECK(cell.count <= structured_sep_count(sys, env, cell.n, 0.05).value);
    CHECK(cell.count <= std::ceil(1.0 / (0.05 * cfg.mesh_factor)));
  }
}

TEST_CASE("random expanding entropy averages the log multipliers") {
  const auto sys = make_system("random-expanding(2,3,0.5)");
  auto cfg = small_config(18, 32);
  const auto r = eps_topological_entropy(sys, 0.01, cfg);
  CHECK(r.entry.estimate == Approx(0.5 * (std::log(2.0) + std::log(3.0))).epsilon(0.15));
  CHECK(r.entry.num_omega == 32);
  CHECK(r.entry.stderr_ > 0.0);
}

TEST_CASE("deterministic systems use a single environment") {
  const auto r = eps_topological_entropy(make_system("doubling"), 0.1, small_config(4, 16));
  CHECK(r.entry.num_omega == 1);
  CHECK(r.entry.stderr_ == 0.0);
}

TEST_CASE("doubling has mean dimension zero") {
  const auto sys = make_system("doubling");
  const auto curve = topological_curve(sys, geometric_grid(0.0625, 0.0625 / 32.0), small_config(12, 1));
  const auto m = mdim_estimate(curve);
  CHECK(m.upper <= 0.1);
}

TEST_CASE("product shift has mean dimension near one") {
  const auto sys = make_system("product-shift(12)");
  auto cfg = small_config(7, 1);
  cfg.backend = Backend::structured;
  const auto curve = topological_curve(sys, geometric_grid(0.25, 1.0 / 64.0), cfg);
  const auto m = mdim_estimate(curve);
  CHECK(m.lower >= 0.7);
  CHECK(m.upper <= 1.3);
}

TEST_CASE("structured backend outside its validity range is an error") {
  auto cfg = small_config(8, 1);
  cfg.backend = Backend::structured;
  CHECK_THROWS_AS(eps_topological_entropy(make_system("product-shift(12)"), 1.0 / 64.0, cfg), std::domain_error);
}

TEST_CASE("cover entropy of cylinder partitions") {
  const auto sys = make_system("full-shift(2)");
  const auto cover = cylinder_cover(sys.fiber, 2);
  auto cfg = small_config(5, 2);
  const auto s = cover_entropy(sys, cover, cfg);
  CHECK(s.entry.backend == "structured");
  CHECK(s.entry.estimate == Approx(kLog2));
  cfg.backend = Backend::enumerative;
  const auto e = cover_entropy(sys, cover, cfg);
  CHECK(e.entry.estimate == Approx(kLog2));
}

TEST_CASE("cover counts over a grid are tagged as lower bounds") {
  const auto sys = make_system("doubling");
  const auto cover = net_cover(sys.fiber, 0.25);
  auto cfg = small_config(3, 1);
  const auto c = cover_entropy(sys, cover, cfg);
  CHECK(c.entry.exactness == Exactness::greedy_lower);
  // 8 arcs of radius 1/8; each doubling step at most doubles what is needed
  REQUIRE(c.cells.size() == 3);
  CHECK(c.cells[0].count == 8.0);
  CHECK(c.cells[1].count <= 16.0);
  CHECK(c.cells[2].count <= 32.0);
}

TEST_CASE("budgets are enforced") {
  auto cfg = small_config(4, 1);
  cfg.backend = Backend::enumerative;
  cfg.max_cloud_points = 16;
  CHECK_THROWS_AS(eps_topological_entropy(make_system("doubling"), 0.01, cfg), BudgetExceeded);
  CHECK_THROWS_AS(eps_topological_entropy(make_system("full-shift(2)"), 0.01, cfg), BudgetExceeded);
  cfg.max_cloud_points = kDefaultMaxCloudPoints;
  cfg.max_cell_seconds = 0.0;
  CHECK_THROWS_AS(eps_topological_entropy(make_system("doubling"), 0.01, cfg), BudgetExceeded);
}

TEST_CASE("schedules are validated") {
  TopologicalConfig cfg;
  cfg.n_schedule = {1, 3, 2};
  CHECK_THROWS_AS(eps_topological_entropy(make_system("doubling"), 0.1, cfg), std::invalid_argument);
  cfg.n_schedule = {};
  CHECK_THROWS_AS(eps_topological_entropy(make_system("doubling"), 0.1, cfg), std::invalid_argument);
  cfg.n_schedule = {1, 2};
  CHECK_THROWS_AS(eps_topological_entropy(make_system("doubling"), -0.1, cfg), std::invalid_argument);
}

TEST_CASE("curves are reproducible for a fixed seed") {
  const auto sys = make_system("random-expanding(2,3,0.5)");
  auto cfg = small_config(6, 4);
  cfg.seed = 99;
  const auto a = eps_topological_entropy(sys, 0.05, cfg);
  const auto b = eps_topological_entropy(sys, 0.05, cfg);
  CHECK(a.entry.estimate == b.entry.estimate);
  cfg.seed = 100;
  const auto c = eps_topological_entropy(sys, 0.05, cfg);
  CHECK(a.entry.estimate != c.entry.estimate);
}
