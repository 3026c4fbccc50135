// Standalone acceptance run: one PASS/FAIL line per criterion, exit status 0
// only when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rdsmdim/config.hpp"
#include "rdsmdim/harness.hpp"
#include "rdsmdim/io.hpp"

namespace {

using namespace rdsmdim;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      out_.pass = false;
      if (!out_.detail.empty()) out_.detail += "; ";
      out_.detail += what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome done() {
    if (out_.pass) out_.detail = notes_;
    return out_;
  }

 private:
  Outcome out_;
  std::string notes_;
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

const double kLog2 = std::log(2.0);

double binary_entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

DisintegratedMeasure bernoulli(const FiberedSystem& sys, std::vector<double> p) {
  auto spec = MeasureSpec::bernoulli(std::move(p));
  spec.id = measure_label(spec);
  return measure_provider(sys, spec, 0);
}

Outcome criterion1() {
  Check c;
  const auto sys = make_system("full-shift(2)");
  const auto mu = bernoulli(sys, {0.5, 0.5});
  const auto env = omega_sample(sys, 0, 0, 64);
  for (std::size_t n = 1; n <= 4; ++n)
    for (std::size_t m : {1, 2}) {
      const double eps = std::ldexp(1.0, -static_cast<int>(m));
      const double expected = std::ldexp(1.0, static_cast<int>(n + m - 1));
      const auto st = structured_sep_count(sys, env, n, eps);
      c.require(st.value == expected && st.exactness == Exactness::exact,
                "structured sep n=" + std::to_string(n) + " m=" + std::to_string(m) + " gave " + num(st.value));
      // Exhaustive clique search is kept to at most 32 words.
      if (n + m <= 5) {
        const auto words = oracle::all_words(2, n + m);
        const auto brute = oracle::max_separated(
            words.size(),
            [&](std::size_t i, std::size_t j) { return oracle::shift_bowen_distance(words[i], words[j], n); }, eps);
        c.require(static_cast<double>(brute) == expected, "brute-force sep disagrees at n=" + std::to_string(n));
      }
      // The brute-force Katok count enumerates subfamilies of distinct balls,
      // which stays feasible up to 16 words.
      if (n + m > 4) continue;
      for (double delta : {0.25, 0.1}) {
        const auto k = katok_count(mu, sys, env, n, eps, delta);
        const auto kb = oracle::full_shift_katok(2, {0.5, 0.5}, n + m, n, eps, delta);
        c.require(k.value == static_cast<double>(kb),
                  "katok n=" + std::to_string(n) + " eps=" + num(eps) + " delta=" + num(delta) + ": " + num(k.value) +
                      " vs brute " + std::to_string(kb));
      }
    }
  const auto k = katok_count(mu, sys, env, 1, 0.5, 0.25);
  c.require(k.value == 4.0, "katok(n=1, eps=1/2, delta=0.25) = " + num(k.value));
  const auto cover = cylinder_cover(sys.fiber, 1);
  const auto s = shapira_count(mu, sys, env, cover, 2, 0.3);
  c.require(s.value == 3.0, "shapira(n=2, delta=0.3) = " + num(s.value));
  c.require(oracle::full_shift_shapira_first_letter(2, {0.5, 0.5}, 2, 0.3) == 3, "brute-force shapira is not 3");
  c.note("katok=" + num(k.value) + " shapira=" + num(s.value));
  return c.done();
}

Outcome criterion2() {
  Check c;
  const auto rep = default_symbolic_suite(0, false);
  c.require(rep.instances >= 200, "only " + std::to_string(rep.instances) + " instances");
  c.require(rep.all_hard_passed(), std::to_string(rep.hard_failed()) + " HARD failures");
  for (const auto& v : rep.verdicts)
    if (!v.passed) {
      c.require(false, v.check + " [" + v.instance + "] " + v.witness);
      break;
    }
  c.note(std::to_string(rep.instances) + " instances, " + std::to_string(rep.hard_total()) + " HARD checks");
  return c.done();
}

Outcome criterion3() {
  Check c;
  TopologicalConfig tc;
  tc.n_schedule.clear();
  for (std::size_t n = 1; n <= 18; ++n) tc.n_schedule.push_back(n);
  tc.num_omega = 32;
  const auto d = eps_topological_entropy(make_system("doubling"), 1e-2, tc).entry;
  c.require(d.estimate >= 0.9 * kLog2 && d.estimate <= 1.1 * kLog2, "doubling h = " + num(d.estimate));
  const auto r = eps_topological_entropy(make_system("random-expanding(2,3,0.5)"), 1e-2, tc).entry;
  const double target = 0.5 * (std::log(2.0) + std::log(3.0));
  c.require(r.estimate >= 0.85 * target && r.estimate <= 1.15 * target, "random-expanding h = " + num(r.estimate));
  c.note("doubling " + num(d.estimate / kLog2) + "*log2 (" + d.backend + "), random-expanding " +
         num(r.estimate / target) + "*target");
  return c.done();
}

Outcome criterion4() {
  Check c;
  const auto sys = make_system("full-shift(2)");
  MeasureConfig mc;
  mc.n_schedule = {125, 250, 500, 1000, 2000};
  mc.num_omega = 1;
  const double eps = 0.125;
  for (double p : {0.5, 0.7}) {
    const auto mu = bernoulli(sys, {p, 1 - p});
    const double h = binary_entropy(p);
    const double tol = p == 0.5 ? 0.05 : 0.07;
    const double values[] = {ks_eps_entropy(sys, mu, eps, mc).entry.estimate,
                             katok_entropy(sys, mu, eps, mc).entry.estimate,
                             shapira_entropy(sys, mu, eps, mc).entry.estimate,
                             brin_katok_entropy(sys, mu, eps, mc).curve.entry.estimate};
    const char* names[] = {"ks", "katok", "shapira", "brin-katok"};
    std::string ratios;
    for (int i = 0; i < 4; ++i) {
      const double ratio = values[i] / h;
      c.require(std::fabs(ratio - 1.0) <= tol, std::string(names[i]) + " at p=" + num(p) + " ratio " + num(ratio));
      ratios += (i ? "/" : "") + num(ratio, 5);
    }
    c.note("p=" + num(p) + " ratios " + ratios);
  }
  return c.done();
}

Outcome criterion5() {
  Check c;
  SweepConfig cfg;
  cfg.run_id = "criterion-5";
  cfg.system.catalog = "full-shift(2)";
  cfg.eps_grid = default_eps_grid(make_system(cfg.system).fiber);
  cfg.num_omega = 4;
  cfg.candidates = {MeasureSpec::bernoulli({0.5, 0.5})};
  cfg.run_suite = false;
  const auto res = run_sweep(cfg);
  double worst = 0.0;
  c.require(res.skipped.empty(), "cells were skipped");
  c.require(res.gaps.size() == 4 * cfg.eps_grid.size(), "gap table incomplete");
  for (const auto& g : res.gaps) {
    worst = std::max(worst, std::fabs(g.gap));
    c.require(std::fabs(g.gap) <= 0.05, std::string(to_string(g.principle)) + " gap " + num(g.gap) + " at eps " +
                                            num(g.epsilon));
  }
  c.note("max |gap| " + num(worst) + " over " + std::to_string(res.gaps.size()) + " rows");
  return c.done();
}

Outcome criterion6() {
  Check c;
  TopologicalConfig tc;
  tc.num_omega = 1;
  const auto doubling = make_system("doubling");
  tc.n_schedule = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const auto dcurve = topological_curve(doubling, geometric_grid(0.0625, 0.0625 / 64.0, 0.5), tc);
  const auto dm = mdim_estimate(dcurve);
  c.require(dm.upper <= 0.1, "doubling mdim upper " + num(dm.upper));

  const auto ps = make_system("product-shift(12)");
  tc.backend = Backend::structured;
  tc.n_schedule = {1, 2, 3, 4, 5, 6, 7};
  const auto pcurve = topological_curve(ps, geometric_grid(0.25, 1.0 / 64.0, 0.5), tc);
  const auto pm = mdim_estimate(pcurve);
  c.require(pm.lower >= 0.7, "product-shift mdim lower " + num(pm.lower));
  c.require(pm.upper <= 1.3, "product-shift mdim upper " + num(pm.upper));
  c.note("doubling upper " + num(dm.upper) + ", product-shift(12) lower " + num(pm.lower) + " upper " +
         num(pm.upper));
  return c.done();
}

// Frozen after an independent Monte Carlo calibration (see README).
constexpr double kSmbThreshold = 0.02;

Outcome criterion7() {
  Check c;
  const auto sys = make_system("full-shift(2)");
  const auto mu = bernoulli(sys, {0.7, 0.3});
  const auto rep = smb_diagnostic(sys, mu, PartitionSpec::cylinders(sys.fiber, 1), {125, 250, 500, 1000, 2000}, 32, 0);
  c.require(rep.n == 2000, "wrong n");
  c.require(rep.mean_deviation < kSmbThreshold, "mean deviation " + num(rep.mean_deviation));
  c.note("mean deviation " + num(rep.mean_deviation) + " (threshold " + num(kSmbThreshold) + ")");
  return c.done();
}

Outcome criterion8() {
  Check c;
  const auto sys = make_system("full-shift(2)");
  MeasureConfig mc;
  mc.n_schedule = {125, 250, 500, 1000, 2000};
  mc.num_omega = 1;
  const auto uniform = brin_katok_entropy(sys, bernoulli(sys, {0.5, 0.5}), 0.125, mc).curve.entry;
  c.require(uniform.dispersion == 0.0, "uniform dispersion " + num(uniform.dispersion, 17));
  const auto biased = brin_katok_entropy(sys, bernoulli(sys, {0.7, 0.3}), 0.125, mc).curve.entry;
  c.require(biased.dispersion < 0.05, "biased dispersion " + num(biased.dispersion));
  c.note("dispersion " + num(uniform.dispersion) + " and " + num(biased.dispersion));
  return c.done();
}

Outcome criterion9() {
  Check c;
  const char* text =
      "seed = 11\nrun_id = determinism\n[system]\nname = random-subshift(2,0.5)\n[grid]\nepsilon_max = 0.25\n"
      "epsilon_min = 0.03125\nn = 1..6\nnum_omega = 3\nnum_pairs = 8\n[measures]\n"
      "candidates = bernoulli(0.6,0.4); markov(0.9,0.1,0.2,0.8)\n";
  std::string first[3];
  for (int run = 0; run < 2; ++run) {
    const auto cfg = parse_config(text);
    const auto res = run_sweep(cfg.sweep);
    RunManifest m;
    m.run_id = cfg.sweep.run_id;
    m.config_hash = cfg.hash;
    m.seed = cfg.sweep.seed;
    m.completion = completion_map(cfg.sweep, res);
    const std::string out[3] = {render([&](std::ostream& os) { write_cells_csv(os, res); }),
                                render([&](std::ostream& os) { write_mdim_csv(os, res); }),
                                result_to_json(res, m).dump(2)};
    for (int i = 0; i < 3; ++i) {
      if (run == 0) first[i] = out[i];
      else c.require(first[i] == out[i], "output " + std::to_string(i) + " differs between runs");
    }
  }
  c.note(std::to_string(first[0].size() + first[1].size() + first[2].size()) + " bytes identical");
  return c.done();
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 exact combinatorics oracle", 1.0, criterion1},
      {"2 inequality suites", 30.0, criterion2},
      {"3 topological entropy recovery", 300.0, criterion3},
      {"4 measure-side entropy recovery", 120.0, criterion4},
      {"5 variational gap", 120.0, criterion5},
      {"6 metric mean dimension", 300.0, criterion6},
      {"7 SMB diagnostic", 300.0, criterion7},
      {"8 Brin-Katok dispersion", 300.0, criterion8},
      {"9 determinism", 300.0, criterion9},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit_seconds) {
      o.pass = false;
      o.detail += "; took " + num(secs) + " s, limit " + num(cr.limit_seconds) + " s";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
