#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rdsmdim/topological.hpp"

using namespace rdsmdim;
using Catch::Approx;

TEST_CASE("derived seeds depend only on master, stream and cell") {
  const auto a = derive_seed(7, "stream", {1, 2});
  CHECK(a == derive_seed(7, "stream", {1, 2}));
  CHECK(a != derive_seed(8, "stream", {1, 2}));
  CHECK(a != derive_seed(7, "other", {1, 2}));
  CHECK(a != derive_seed(7, "stream", {2, 1}));
  CHECK(a != derive_seed(7, "stream", {1}));
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng r1(42), r2(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = r1.uniform();
    CHECK(u == r2.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng r(3);
  const std::vector<double> p{0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(r.categorical(p) == 1);
  for (int i = 0; i < 100; ++i) CHECK(r.below(5) < 5);
}

TEST_CASE("Bernoulli base frequencies match the law") {
  const auto base = BaseProcess::bernoulli({0.3, 0.7});
  const auto traj = sample_base(base, 11, 20000);
  CHECK(traj.past_length() == kDefaultPast);
  double ones = 0;
  for (std::size_t t = 0; t < traj.horizon(); ++t) ones += traj.at(static_cast<std::ptrdiff_t>(t));
  CHECK(ones / 20000.0 == Approx(0.7).margin(0.02));
  CHECK(base.entropy_rate() == Approx(-0.3 * std::log(0.3) - 0.7 * std::log(0.7)));
}

TEST_CASE("Markov base has the right stationary law and entropy rate") {
  const auto base = BaseProcess::markov({0.5, 0.5}, {{0.9, 0.1}, {0.2, 0.8}});
  CHECK(base.irreducible());
  const auto pi = base.stationary_law();
  CHECK(pi[0] == Approx(2.0 / 3.0));
  CHECK(pi[1] == Approx(1.0 / 3.0));
  const double h = 2.0 / 3.0 * (-0.9 * std::log(0.9) - 0.1 * std::log(0.1)) +
                   1.0 / 3.0 * (-0.2 * std::log(0.2) - 0.8 * std::log(0.8));
  CHECK(base.entropy_rate() == Approx(h));
}

TEST_CASE("periodic and reducible chains still get a stationary law") {
  const auto periodic = BaseProcess::markov({1.0, 0.0}, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK(periodic.stationary_law()[0] == Approx(0.5));
  const auto reducible = BaseProcess::markov({1.0, 0.0}, {{0.5, 0.5}, {0.0, 1.0}});
  CHECK_FALSE(reducible.irreducible());
  CHECK(reducible.stationary_law()[1] == Approx(1.0).margin(1e-3));
}

TEST_CASE("invalid base laws are rejected") {
  CHECK_THROWS_AS(BaseProcess::bernoulli({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(BaseProcess::bernoulli({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(BaseProcess::markov({0.5, 0.5}, {{1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("shifted trajectory sees the later symbols") {
  const auto traj = sample_base(BaseProcess::bernoulli({0.5, 0.5}), 5, 50);
  const auto s = traj.shifted(10);
  for (std::ptrdiff_t t = -5; t < 40; ++t) CHECK(s.at(t) == traj.at(t + 10));
  CHECK_THROWS_AS(traj.at(50), std::out_of_range);
}

TEST_CASE("one-sided bases carry no past") {
  SystemSpec spec;
  spec.catalog = "random-expanding(2,3,0.5)";
  spec.two_sided = false;
  const auto sys = make_system(spec);
  CHECK(omega_sample(sys, 0, 0, 10).past_length() == 0);
}

TEST_CASE("catalog systems have the documented fibers and hints") {
  const auto d = make_system("doubling");
  CHECK(d.fiber.kind == FiberKind::circle);
  CHECK(d.hint == StructuredHint::linear_circle);
  const auto p = make_system("product-shift(12)");
  CHECK(p.fiber.kind == FiberKind::weighted_cube);
  CHECK(p.fiber.dimension == 12);
  CHECK(p.hint == StructuredHint::product_shift);
  const auto f = make_system("full-shift(3)");
  CHECK(f.fiber.is_symbolic());
  CHECK(f.fiber.alphabet == 3);
  CHECK(f.is_shift_type_symbolic());
  const auto r = make_system("random-subshift(2,0.5)");
  CHECK(r.fiber.is_symbolic());
  CHECK(r.base.alphabet_size == 2);
}

TEST_CASE("unknown or malformed catalog names are rejected") {
  CHECK_THROWS_AS(make_system("tripling"), std::invalid_argument);
  CHECK_THROWS_AS(make_system("product-shift(0)"), std::invalid_argument);
  CHECK_THROWS_AS(make_system("full-shift(2,0.5,0.6)"), std::invalid_argument);
  CHECK_THROWS_AS(make_system("random-expanding(2,3,1.5)"), std::invalid_argument);
  CHECK_THROWS_AS(make_system("doubling(2)"), std::invalid_argument);
}

TEST_CASE("doubling map agrees with the definition") {
  const auto sys = make_system("doubling");
  const auto env = omega_sample(sys, 0, 0, 20);
  const auto seg = fiber_iterate(sys, env, FiberPoint::real({0.1}), 20);
  double x = 0.1;
  for (const auto& pt : seg.points) {
    CHECK(pt.coords[0] == Approx(x).margin(1e-9));
    x = std::fmod(2.0 * x, 1.0);
  }
}

TEST_CASE("random expanding maps use the multiplier of the current symbol") {
  const auto sys = make_system("random-expanding(2,3,0.5)");
  const auto env = omega_sample(sys, 9, 0, 12);
  const auto seg = fiber_iterate(sys, env, FiberPoint::real({0.123}), 12);
  double x = 0.123;
  for (std::size_t t = 0; t < seg.points.size(); ++t) {
    CHECK(seg.points[t].coords[0] == Approx(x).margin(1e-9));
    const double m = env.at(static_cast<std::ptrdiff_t>(t)) == 0 ? 2.0 : 3.0;
    x = std::fmod(m * x, 1.0);
  }
}

TEST_CASE("product shift drops the first coordinate through the tent map") {
  const auto sys = make_system("product-shift(4)");
  const auto y = sys.apply(0, FiberPoint::real({0.3, 0.1, 0.2, 0.9}));
  REQUIRE(y.coords.size() == 4);
  CHECK(y.coords[0] == 0.1);
  CHECK(y.coords[1] == 0.2);
  CHECK(y.coords[2] == 0.9);
  CHECK(y.coords[3] == Approx(0.6));
  CHECK(tent(0.75) == Approx(0.5));
}

TEST_CASE("full shift is the plain left shift on the stored prefix") {
  const auto sys = make_system("full-shift(2)");
  const auto y = sys.apply(0, FiberPoint::symbolic({1, 0, 1, 1}));
  REQUIRE(y.word.size() == 4);
  CHECK(std::vector<std::uint8_t>(y.word.begin(), y.word.begin() + 3) == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("random subshift rotates letters by the environment symbol") {
  const auto sys = make_system("random-subshift(2,0.5)");
  const auto x = FiberPoint::symbolic({1, 0, 1, 1});
  for (std::uint32_t s = 0; s < 2; ++s) {
    const auto y = sys.apply(s, x);
    const auto r = sys.maps.rotations.at(s);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y.word[i] == (x.word[i + 1] + r) % 2);
  }
}

TEST_CASE("fiber distances match their definitions") {
  const auto circle = FiberSpace::circle();
  CHECK(circle.distance(FiberPoint::real({0.05}), FiberPoint::real({0.95})) == Approx(0.1));
  CHECK(circle.diameter() == 0.5);
  const auto cube = FiberSpace::weighted_cube(3);
  CHECK(cube.distance(FiberPoint::real({0.0, 0.0, 0.0}), FiberPoint::real({0.1, 0.0, 1.0})) == Approx(0.25));
  const auto sym = FiberSpace::symbolic(2);
  const oracle::Word a{0, 1, 1}, b{0, 1, 0};
  CHECK(sym.distance(FiberPoint::symbolic(a), FiberPoint::symbolic(b)) == oracle::word_distance(a, b));
  CHECK(sym.distance(FiberPoint::symbolic(a), FiberPoint::symbolic(a)) == 0.0);
}

TEST_CASE("symbolic depth helpers at dyadic and non-dyadic radii") {
  const auto f = FiberSpace::symbolic(2);
  CHECK(separating_positions(f, 0.5) == 1);
  CHECK(open_ball_depth(f, 0.5) == 2);
  CHECK(separating_positions(f, 0.3) == 2);
  CHECK(open_ball_depth(f, 0.3) == 2);
  CHECK(separating_positions(f, 1.0) == 0);
  CHECK(bowen_depth(5, 0) == 0);
  CHECK(bowen_depth(5, 2) == 6);
}

TEST_CASE("Bowen distance on the full shift matches the oracle") {
  const auto sys = make_system("full-shift(2)");
  const auto env = omega_sample(sys, 0, 0, 8);
  const auto words = oracle::all_words(2, 7);
  for (std::size_t n : {1, 3, 5})
    for (std::size_t i = 0; i < words.size(); i += 7)
      for (std::size_t j = 0; j < words.size(); j += 5) {
        const double lib =
            bowen_distance(sys, env, FiberPoint::symbolic(words[i]), FiberPoint::symbolic(words[j]), n);
        CHECK(lib == oracle::shift_bowen_distance(words[i], words[j], n));
      }
}

TEST_CASE("Bowen distance of the doubling map matches the oracle") {
  const auto sys = make_system("doubling");
  const auto env = omega_sample(sys, 0, 0, 10);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(), y = rng.uniform();
    CHECK(bowen_distance(sys, env, FiberPoint::real({x}), FiberPoint::real({y}), 6) ==
          Approx(oracle::doubling_bowen_distance(x, y, 6)).margin(1e-12));
  }
}
