// Command line front end: simulate, entropy, mdim, verify, sweep.
//
// Exit codes: 0 success, 1 a HARD inequality check failed, 2 configuration
// or usage error, 3 budget exceeded (partial results are still written), 4
// unexpected internal error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rdsmdim/config.hpp"
#include "rdsmdim/harness.hpp"
#include "rdsmdim/io.hpp"

namespace {

using namespace rdsmdim;

constexpr int kExitOk = 0;
constexpr int kExitHardFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "both";
  // simulate
  std::size_t points = 4;
  std::size_t steps = 0;
  // verify
  bool default_suite = false;
  bool no_soft = false;
};

struct Prepared {
  LoadedConfig cfg;
  RunManifest manifest;
  std::filesystem::path out;
  OutputFormat format = OutputFormat::both;
};

Prepared prepare(const Options& opt) {
  Prepared p;
  p.cfg = load_config(opt.config_path);
  p.manifest.seed_source = p.cfg.seed_given ? "config" : "default";
  if (opt.seed) {
    p.cfg.sweep.seed = *opt.seed;
    p.manifest.seed_source = "flag";
  }
  p.manifest.run_id = p.cfg.sweep.run_id;
  p.manifest.config_hash = p.cfg.hash;
  p.manifest.seed = p.cfg.sweep.seed;
  p.manifest.started_at = utc_timestamp();
  try {
    p.format = output_format_from_string(opt.format);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0, "--format");
  }
  if (!opt.out_dir.empty()) p.out = opt.out_dir;
  else if (const char* env = std::getenv("RDSMDIM_OUT"); env && *env) p.out = env;
  else p.out = std::filesystem::path("rdsmdim-out") / p.cfg.sweep.run_id;
  return p;
}

void report_written(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
}

int budget_status(const SweepResult& r) {
  for (const auto& s : r.skipped)
    std::cerr << "skipped " << to_string(s.kind) << (s.measure_id.empty() ? "" : " " + s.measure_id)
              << " eps=" << s.epsilon << ": " << s.reason << "\n";
  return r.skipped.empty() ? kExitOk : kExitBudget;
}

std::string describe_point(const FiberPoint& x, std::size_t letters) {
  std::ostringstream os;
  if (!x.word.empty()) {
    for (std::size_t i = 0; i < std::min(letters, x.word.size()); ++i) os << int(x.word[i]);
  } else {
    for (std::size_t i = 0; i < x.coords.size(); ++i) os << (i ? " " : "") << io_detail::csv_number(x.coords[i]);
  }
  return os.str();
}

int run_simulate(const Options& opt) {
  auto p = prepare(opt);
  const auto& cfg = p.cfg.sweep;
  const auto sys = make_system(cfg.system);
  const std::size_t steps = opt.steps ? opt.steps : cfg.n_schedule.back();
  const std::size_t num_omega = effective_num_omega(sys, cfg.num_omega);
  const std::size_t word_len = steps + 32 + sys.guard;

  std::ostringstream csv;
  csv << "omega_index,point_index,step,base_symbol,point\n";
  nlohmann::json orbits = nlohmann::json::array();
  for (std::size_t w = 0; w < num_omega; ++w) {
    const auto env = omega_sample(sys, cfg.seed, w, steps + sys.guard);
    for (std::size_t i = 0; i < opt.points; ++i) {
      Rng rng(derive_seed(cfg.seed, "simulate-point", {w, i}));
      FiberPoint x;
      if (sys.fiber.is_symbolic()) {
        for (std::size_t t = 0; t < word_len; ++t) x.word.push_back(static_cast<std::uint8_t>(rng.below(sys.fiber.alphabet)));
      } else {
        for (std::size_t d = 0; d < sys.fiber.dimension; ++d) x.coords.push_back(rng.uniform());
      }
      const auto seg = fiber_iterate(sys, env, x, steps);
      nlohmann::json orbit{{"omega_index", w}, {"point_index", i}, {"steps", nlohmann::json::array()}};
      for (std::size_t t = 0; t < seg.points.size(); ++t) {
        const auto text = describe_point(seg.points[t], 32);
        csv << w << ',' << i << ',' << t << ',' << seg.env.symbols[t] << ',' << io_detail::csv_field(text) << '\n';
        orbit["steps"].push_back({{"base_symbol", seg.env.symbols[t]}, {"point", text}});
      }
      orbits.push_back(std::move(orbit));
    }
  }
  std::filesystem::create_directories(p.out);
  std::vector<std::filesystem::path> written;
  if (p.format != OutputFormat::json) {
    write_text_file(p.out / "orbits.csv", csv.str());
    written.push_back(p.out / "orbits.csv");
  }
  if (p.format != OutputFormat::csv) {
    nlohmann::json j{{"system", sys.name}, {"seed", cfg.seed}, {"steps", steps}, {"orbits", orbits}};
    write_text_file(p.out / "orbits.json", j.dump(2) + "\n");
    written.push_back(p.out / "orbits.json");
  }
  report_written(written);
  return kExitOk;
}

// entropy, mdim and sweep share the computation and differ in what they keep
enum class SweepMode { entropy, mdim, full };

int run_sweep_command(const Options& opt, SweepMode mode) {
  auto p = prepare(opt);
  SweepConfig cfg = p.cfg.sweep;
  if (mode != SweepMode::full) cfg.run_suite = false;
  SweepResult res = run_sweep(cfg);
  p.manifest.completion = completion_map(cfg, res);
  p.manifest.finished_at = utc_timestamp();
  if (mode == SweepMode::entropy) {
    res.mdim.clear();
    res.gaps.clear();
  } else if (mode == SweepMode::mdim) {
    res.cells.clear();
    res.gaps.clear();
  }
  report_written(write_results(res, p.manifest, p.out, p.format));
  for (const auto& m : res.mdim)
    if (m.available)
      std::cerr << "mdim " << to_string(m.kind) << (m.measure_id.empty() ? "" : " " + m.measure_id)
                << ": upper " << m.estimate.upper << " lower " << m.estimate.lower << "\n";
    else
      std::cerr << "mdim " << to_string(m.kind) << (m.measure_id.empty() ? "" : " " + m.measure_id)
                << ": unavailable (" << m.note << ")\n";
  if (res.suite_ran && !res.suite.all_hard_passed()) {
    std::cerr << res.suite.hard_failed() << " HARD checks failed\n";
    return kExitHardFailure;
  }
  return budget_status(res);
}

int run_verify(const Options& opt) {
  auto p = prepare(opt);
  const auto& cfg = p.cfg.sweep;
  SuiteReport report;
  if (opt.default_suite) {
    report = default_symbolic_suite(cfg.seed, !opt.no_soft);
  } else {
    const auto sys = make_system(cfg.system);
    if (!sys.is_shift_type_symbolic())
      throw ConfigError("verify needs a symbolic shift system, got '" + sys.name + "'", 0, "system.name");
    std::vector<DisintegratedMeasure> ms;
    for (auto spec : cfg.candidates)
      if (spec.kind == MeasureKind::exact_symbolic) ms.push_back(measure_provider(sys, spec, cfg.seed, cfg.max_atoms));
    SuiteParams sp;
    sp.eps_values = {0.5 * sys.fiber.scale, 0.25 * sys.fiber.scale};
    sp.num_omega = std::min<std::size_t>(cfg.num_omega, 3);
    sp.seed = cfg.seed;
    sp.soft = !opt.no_soft;
    report = inequality_suite(sys, ms, sp);
  }
  p.manifest.finished_at = utc_timestamp();
  std::filesystem::create_directories(p.out);
  std::vector<std::filesystem::path> written;
  if (p.format != OutputFormat::json) {
    write_text_file(p.out / "suite.csv", render([&](std::ostream& os) { write_suite_csv(os, report); }));
    written.push_back(p.out / "suite.csv");
  }
  if (p.format != OutputFormat::csv) {
    nlohmann::json j{{"manifest", manifest_to_json(p.manifest, false)}, {"suite", suite_to_json(report)}};
    write_text_file(p.out / "suite.json", j.dump(2) + "\n");
    written.push_back(p.out / "suite.json");
  }
  write_text_file(p.out / "run_manifest.json", manifest_to_json(p.manifest, true).dump(2) + "\n");
  written.push_back(p.out / "run_manifest.json");
  report_written(written);
  for (const auto& v : report.verdicts)
    if (!v.passed)
      std::cerr << (v.hard ? "HARD" : "soft") << " fail " << v.check << " [" << v.instance << "]: " << v.witness << "\n";
  std::cerr << report.instances << " instances, HARD " << report.hard_total() - report.hard_failed() << "/"
            << report.hard_total() << " passed, soft " << report.soft_total() - report.soft_failed() << "/"
            << report.soft_total() << " passed\n";
  return report.all_hard_passed() ? kExitOk : kExitHardFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy and metric mean dimension estimates for random dynamical systems"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "configuration file")->required();
    sub->add_option("--seed", opt.seed, "master seed, overrides the config");
    sub->add_option("--out", opt.out_dir, "output directory (default $RDSMDIM_OUT or rdsmdim-out/<run_id>)");
    sub->add_option("--format", opt.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  };
  auto* simulate = app.add_subcommand("simulate", "dump fiber orbits along sampled environments");
  common(simulate);
  simulate->add_option("--points", opt.points, "orbits per environment")->check(CLI::PositiveNumber);
  simulate->add_option("--steps", opt.steps, "orbit length (default: largest n of the schedule)");
  auto* entropy = app.add_subcommand("entropy", "entropy curves of both sides");
  common(entropy);
  auto* mdim = app.add_subcommand("mdim", "metric mean dimension slopes");
  common(mdim);
  auto* verify = app.add_subcommand("verify", "exact inequality suite");
  common(verify);
  verify->add_flag("--default-suite", opt.default_suite, "run the built-in symbolic instance grid");
  verify->add_flag("--no-soft", opt.no_soft, "skip the tolerance-based checks");
  auto* sweep = app.add_subcommand("sweep", "full sweep with gaps, mdim and manifest");
  common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return run_simulate(opt);
    if (entropy->parsed()) return run_sweep_command(opt, SweepMode::entropy);
    if (mdim->parsed()) return run_sweep_command(opt, SweepMode::mdim);
    if (verify->parsed()) return run_verify(opt);
    if (sweep->parsed()) return run_sweep_command(opt, SweepMode::full);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "unsupported request: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return kExitConfig;
}
