#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "rdsmdim/measure_entropy.hpp"

using namespace rdsmdim;
using Catch::Approx;

namespace {

double binary_entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

DisintegratedMeasure make_measure(const FiberedSystem& sys, MeasureSpec spec) {
  if (spec.id.empty()) spec.id = "m";
  return measure_provider(sys, std::move(spec), 0);
}

MeasureConfig quick_config(std::vector<std::size_t> ns, std::size_t num_omega = 1) {
  MeasureConfig c;
  c.n_schedule = std::move(ns);
  c.num_omega = num_omega;
  return c;
}

}  // namespace

TEST_CASE("Katok counts on the full shift agree with brute force") {
  const auto sys = make_system("full-shift(2)");
  const auto env = omega_sample(sys, 0, 0, 16);
  for (double p : {0.5, 0.7, 0.9}) {
    const auto mu = make_measure(sys, MeasureSpec::bernoulli({p, 1 - p}));
    for (std::size_t n : {1, 2, 3})
      for (double eps : {0.5, 0.25, 0.3})
        for (double delta : {0.5, 0.25, 0.1, 0.05}) {
          const std::size_t depth = bowen_depth(n, open_ball_depth(sys.fiber, eps));
          if (depth > 4) continue;
          const auto lib = katok_count(mu, sys, env, n, eps, delta);
          CHECK(lib.exactness == Exactness::exact);
          CHECK(lib.value == static_cast<double>(oracle::full_shift_katok(2, {p, 1 - p}, depth, n, eps, delta)));
          // the enumerative backend over the measure's atoms gives the same number
          CHECK(katok_count(mu, sys, env, n, eps, delta, Backend::enumerative).value == lib.value);
        }
  }
}

TEST_CASE("Shapira counts on the full shift agree with brute force") {
  const auto sys = make_system("full-shift(2)");
  const auto env = omega_sample(sys, 0, 0, 16);
  const auto cover = cylinder_cover(sys.fiber, 1);
  for (double p : {0.5, 0.7})
    for (std::size_t n : {1, 2, 3, 4})
      for (double delta : {0.5, 0.3, 0.1}) {
        const auto mu = make_measure(sys, MeasureSpec::bernoulli({p, 1 - p}));
        const auto lib = shapira_count(mu, sys, env, cover, n, delta);
        CHECK(lib.value == static_cast<double>(oracle::full_shift_shapira_first_letter(2, {p, 1 - p}, n, delta)));
        CHECK(shapira_count(mu, sys, env, cover, n, delta, Backend::enumerative).value == lib.value);
      }
}

TEST_CASE("type classes handle alphabets with repeated probabilities") {
  const auto sys = make_system("full-shift(3)");
  const auto env = omega_sample(sys, 0, 0, 16);
  const auto fm = make_measure(sys, MeasureSpec::bernoulli({0.25, 0.25, 0.5})).at(sys, env);
  for (std::size_t depth : {1, 2, 3})
    for (double target : {0.3, 0.5, 0.9}) {
      const auto words = oracle::all_words(3, depth);
      std::vector<double> masses;
      for (const auto& w : words) masses.push_back(oracle::bernoulli_mass(w, {0.25, 0.25, 0.5}));
      std::sort(masses.rbegin(), masses.rend());
      std::size_t need = 0;
      double cum = 0.0;
      while (!(cum > target)) cum += masses[need++];
      CHECK(fm.min_cylinders_exceeding(depth, target).value == static_cast<double>(need));
    }
  // a depth far beyond enumeration still has an exact count through its log
  const auto big = fm.min_cylinders_exceeding(600, 0.75);
  CHECK(std::isfinite(big.log_value));
  CHECK(big.log_value / 600.0 < std::log(3.0));
}

TEST_CASE("rotated environments leave counts unchanged") {
  const auto sys = make_system("random-subshift(2,0.5)");
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3}));
  const auto e0 = omega_sample(sys, 0, 0, 16), e1 = omega_sample(sys, 0, 1, 16);
  CHECK(katok_count(mu, sys, e0, 3, 0.25, 0.1).value == katok_count(mu, sys, e1, 3, 0.25, 0.1).value);
  CHECK(katok_count(mu, sys, e0, 3, 0.25, 0.1, Backend::enumerative).value ==
        katok_count(mu, sys, e0, 3, 0.25, 0.1).value);
}

TEST_CASE("Bowen ball mass on the full shift is a cylinder mass") {
  const auto sys = make_system("full-shift(2)");
  const auto env = omega_sample(sys, 0, 0, 16);
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3}));
  const auto x = FiberPoint::symbolic({0, 1, 1, 0, 1, 0, 0, 0, 1, 1});
  for (std::size_t n : {1, 3, 5}) {
    const std::size_t depth = bowen_depth(n, open_ball_depth(sys.fiber, 0.25));
    const oracle::Word prefix(x.word.begin(), x.word.begin() + static_cast<std::ptrdiff_t>(depth));
    CHECK(bowen_ball_mass(mu, sys, env, x, n, 0.25) == Approx(oracle::bernoulli_mass(prefix, {0.7, 0.3})));
  }
}

TEST_CASE("partition entropy of cylinders is additive for Bernoulli measures") {
  const auto sys = make_system("full-shift(2)");
  const auto env = omega_sample(sys, 0, 0, 16);
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3}));
  const auto part = PartitionSpec::cylinders(sys.fiber, 2);
  for (std::size_t n : {1, 2, 5})
    CHECK(partition_entropy(mu, sys, env, part, n).value ==
          Approx(static_cast<double>(n + 1) * binary_entropy(0.7)));
}

TEST_CASE("Markov measures: stationarity and entropy rate") {
  const auto sys = make_system("full-shift(2)");
  const auto stationary = make_measure(sys, MeasureSpec::markov({{0.9, 0.1}, {0.2, 0.8}}, {2.0 / 3.0, 1.0 / 3.0}));
  CHECK(stationary.invariant_by_construction);
  const auto off = make_measure(sys, MeasureSpec::markov({{0.9, 0.1}, {0.2, 0.8}}, {0.5, 0.5}));
  CHECK_FALSE(off.invariant_by_construction);
  const double rate = BaseProcess::markov({0.5, 0.5}, {{0.9, 0.1}, {0.2, 0.8}}).entropy_rate();
  const auto r = ks_eps_entropy(sys, stationary, 0.25, quick_config({4, 8, 16, 32}));
  CHECK(r.entry.estimate == Approx(rate).epsilon(1e-9));
}

TEST_CASE("measure entropies of Bernoulli measures") {
  const auto sys = make_system("full-shift(2)");
  const auto cfg = quick_config({125, 250, 500, 1000, 2000});
  for (double p : {0.5, 0.7}) {
    const auto mu = make_measure(sys, MeasureSpec::bernoulli({p, 1 - p}));
    const double h = binary_entropy(p);
    CHECK(ks_eps_entropy(sys, mu, 0.125, cfg).entry.estimate == Approx(h).epsilon(1e-9));
    CHECK(katok_entropy(sys, mu, 0.125, cfg).entry.estimate == Approx(h).epsilon(0.05));
    CHECK(shapira_entropy(sys, mu, 0.125, cfg).entry.estimate == Approx(h).epsilon(0.05));
    CHECK(brin_katok_entropy(sys, mu, 0.125, cfg).curve.entry.estimate == Approx(h).epsilon(0.05));
  }
}

TEST_CASE("Katok estimates do not increase as delta grows") {
  const auto sys = make_system("full-shift(2)");
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3}));
  const auto r = katok_entropy(sys, mu, 0.25, quick_config({2, 4, 8, 16}));
  REQUIRE(r.entry.delta_trend.size() == 3);
  for (std::size_t i = 1; i < r.entry.delta_trend.size(); ++i) {
    CHECK(r.entry.delta_trend[i].first < r.entry.delta_trend[i - 1].first);
    CHECK(r.entry.delta_trend[i].second >= r.entry.delta_trend[i - 1].second - 1e-12);
  }
}

TEST_CASE("Brin-Katok dispersion vanishes for the uniform measure") {
  const auto sys = make_system("full-shift(2)");
  const auto cfg = quick_config({125, 250, 500, 1000, 2000});
  const auto u = brin_katok_entropy(sys, make_measure(sys, MeasureSpec::bernoulli({0.5, 0.5})), 0.125, cfg);
  CHECK(u.curve.entry.dispersion == 0.0);
  CHECK(u.samples.size() == cfg.num_pairs);
  const auto b = brin_katok_entropy(sys, make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3})), 0.125, cfg);
  CHECK(b.curve.entry.dispersion > 0.0);
  CHECK(b.curve.entry.dispersion < 0.05);
}

TEST_CASE("Shannon-McMillan-Breiman diagnostic") {
  const auto sys = make_system("full-shift(2)");
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.7, 0.3}));
  const auto rep = smb_diagnostic(sys, mu, PartitionSpec::cylinders(sys.fiber, 1), {125, 250, 500, 1000, 2000}, 32, 0);
  CHECK(rep.reference_entropy == Approx(binary_entropy(0.7)));
  CHECK(rep.deviations.size() == 32);
  CHECK(rep.mean_deviation < 0.02);
  CHECK(rep.max_deviation >= rep.mean_deviation);
  const auto leb = make_measure(make_system("doubling"), MeasureSpec::lebesgue());
  CHECK_THROWS_AS(smb_diagnostic(make_system("doubling"), leb, PartitionSpec::grid(FiberSpace::circle(), 0.1), {1, 2},
                                 4, 0),
                  std::domain_error);
}

TEST_CASE("Lebesgue measure on the doubling circle") {
  const auto sys = make_system("doubling");
  const auto mu = make_measure(sys, MeasureSpec::lebesgue());
  CHECK(invariance_diagnostic(mu, sys, 4) == Approx(0.0).margin(1e-12));
  const auto env = omega_sample(sys, 0, 0, 16);
  // an open Bowen ball of radius eps for n steps is an arc of radius eps / 2^(n-1)
  for (std::size_t n : {1, 2, 4})
    CHECK(bowen_ball_mass(mu, sys, env, FiberPoint::real({0.3}), n, 0.1) ==
          Approx(0.2 / std::ldexp(1.0, static_cast<int>(n) - 1)));
  const auto r = katok_entropy(sys, mu, 0.05, quick_config({4, 8, 12, 16}));
  CHECK(r.entry.estimate == Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("Lebesgue measure on the product shift is invariant") {
  const auto sys = make_system("product-shift(3)");
  const auto mu = make_measure(sys, MeasureSpec::lebesgue());
  CHECK(invariance_diagnostic(mu, sys, 2) == Approx(0.0).margin(1e-12));
}

TEST_CASE("a point mass has zero entropy") {
  const auto sys = make_system("doubling");
  const auto mu = make_measure(sys, MeasureSpec::point_mass(FiberPoint::real({0.0})));
  const auto env = omega_sample(sys, 0, 0, 16);
  CHECK(katok_count(mu, sys, env, 4, 0.1, 0.25).value == 1.0);
  CHECK(invariance_diagnostic(mu, sys, 3) == Approx(0.0).margin(1e-12));
  const auto moving = make_measure(sys, MeasureSpec::point_mass(FiberPoint::real({0.3})));
  CHECK(invariance_diagnostic(moving, sys, 3) > 0.1);
}

TEST_CASE("empirical pull-back measures approximate Lebesgue") {
  const auto sys = make_system("doubling");
  const auto mu = make_measure(sys, MeasureSpec::empirical(4000, 16));
  CHECK(invariance_diagnostic(mu, sys, 3, 4) < 0.05);
  const auto env = omega_sample(sys, 0, 0, 32);
  const auto fm = mu.at(sys, env);
  CHECK(fm.support.cloud.size() == 4000);
  double total = 0.0;
  for (double w : fm.support.weights) total += w;
  CHECK(total == Approx(1.0));
}

TEST_CASE("invalid measure descriptions are rejected") {
  const auto sym = make_system("full-shift(2)");
  const auto circle = make_system("doubling");
  CHECK_THROWS_AS(measure_provider(sym, MeasureSpec::bernoulli({0.5, 0.2, 0.3})), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(sym, MeasureSpec::bernoulli({0.5, 0.6})), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(sym, MeasureSpec::lebesgue()), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(circle, MeasureSpec::bernoulli({0.5, 0.5})), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(circle, MeasureSpec::point_mass(FiberPoint::real({1.5}))), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(circle, MeasureSpec::empirical(0)), std::invalid_argument);
  CHECK_THROWS_AS(measure_provider(sym, MeasureSpec::markov({{0.5, 0.5}})), std::invalid_argument);
}

TEST_CASE("delta must lie strictly between zero and one") {
  const auto sys = make_system("full-shift(2)");
  const auto mu = make_measure(sys, MeasureSpec::bernoulli({0.5, 0.5}));
  const auto env = omega_sample(sys, 0, 0, 16);
  CHECK_THROWS_AS(katok_count(mu, sys, env, 2, 0.25, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(katok_count(mu, sys, env, 2, 0.25, 1.0), std::invalid_argument);
}
