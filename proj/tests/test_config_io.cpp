#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdsmdim/config.hpp"
#include "rdsmdim/io.hpp"

using namespace rdsmdim;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kMinimal = "[system]\nname = full-shift(2)\n";

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a configuration error for:\n" << text);
  return ConfigError("unreachable");
}

SweepResult small_result() {
  SweepConfig cfg;
  cfg.run_id = "io, \"quoted\"";
  cfg.system.catalog = "full-shift(2)";
  cfg.eps_grid = {0.25, 0.125, 0.0625, 0.03125};
  cfg.n_schedule = {1, 2, 3, 4};
  cfg.num_omega = 2;
  cfg.num_pairs = 8;
  cfg.candidates = {MeasureSpec::bernoulli({0.5, 0.5})};
  cfg.principles = {Principle::ks, Principle::katok};
  return run_sweep(cfg);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a minimal config fills in defaults") {
  const auto c = parse_config(kMinimal);
  CHECK_FALSE(c.seed_given);
  CHECK(c.sweep.seed == 0);
  CHECK(c.sweep.run_id == "run");
  CHECK(c.sweep.eps_grid == default_eps_grid(FiberSpace::symbolic(2)));
  CHECK(c.sweep.n_schedule.size() == 8);
  CHECK(c.sweep.principles.size() == 4);
  CHECK(c.sweep.candidates.empty());
  CHECK(c.hash.size() == 16);
}

TEST_CASE("every key is parsed") {
  const auto c = parse_config(R"(# comment
seed = 42
run_id = "demo"
suite = false
; another comment
[system]
name = random-expanding(2,3,0.5)
two_sided = false
guard = 4
[grid]
epsilon = 0.1, 0.05, 0.025
n = 1..3, 5, 8
delta = 0.3, 0.2
num_omega = 5
num_pairs = 16
mdim_window = 3
[measures]
candidates = lebesgue; empirical(500,8)
curves = katok, ks
[budget]
max_cloud_points = 1000
max_atoms = 64
max_cell_seconds = 2.5
backend = enumerative
)");
  const auto& s = c.sweep;
  CHECK(c.seed_given);
  CHECK(s.seed == 42);
  CHECK(s.run_id == "demo");
  CHECK_FALSE(s.run_suite);
  CHECK(s.system.catalog == "random-expanding(2,3,0.5)");
  CHECK(s.system.two_sided == std::optional<bool>(false));
  CHECK(s.system.guard == 4);
  CHECK(s.eps_grid == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(s.n_schedule == std::vector<std::size_t>{1, 2, 3, 5, 8});
  CHECK(s.delta_schedule == std::vector<double>{0.3, 0.2});
  CHECK(s.num_omega == 5);
  CHECK(s.num_pairs == 16);
  CHECK(s.mdim_window == 3);
  REQUIRE(s.candidates.size() == 2);
  CHECK(s.candidates[0].id == "lebesgue");
  CHECK(s.principles == std::vector<Principle>{Principle::katok, Principle::ks});
  CHECK(s.max_cloud_points == 1000);
  CHECK(s.max_atoms == 64);
  CHECK(s.max_cell_seconds == 2.5);
  CHECK(s.backend == Backend::enumerative);
}

TEST_CASE("geometric scale grids come from max, min and ratio") {
  const auto c = parse_config(std::string(kMinimal) +
                              "[grid]\nepsilon_max = 0.5\nepsilon_min = 0.0625\nepsilon_ratio = 0.5\n");
  CHECK(c.sweep.eps_grid == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
}

TEST_CASE("unknown keys name the line and suggest a fix") {
  const auto e = config_error("[system]\nname = doubling\n[grid]\nepsilonn = 0.1\n");
  CHECK(e.line == 4);
  CHECK(e.key_path == "grid.epsilonn");
  CHECK_THAT(std::string(e.what()), ContainsSubstring("did you mean 'epsilon'?"));
  const auto s = config_error("[sytem]\nname = doubling\n");
  CHECK(s.line == 1);
  CHECK_THAT(std::string(s.what()), ContainsSubstring("did you mean 'system'?"));
  const auto far = config_error("[system]\nname = doubling\nzzzzzzzz = 1\n");
  CHECK_THAT(std::string(far.what()), !ContainsSubstring("did you mean"));
}

TEST_CASE("malformed configs are rejected with their location") {
  CHECK(config_error("[system]\nname = doubling\nname = full-shift(2)\n").line == 3);
  CHECK(config_error("[system]\nname = doubling\n[system]\n").line == 3);
  CHECK(config_error("[system\nname = doubling\n").line == 1);
  CHECK(config_error("[system]\nname doubling\n").line == 2);
  CHECK(config_error("[system]\nname = \"doubling\n").line == 2);
  CHECK(config_error("seed = 1\n").key_path == "system.name");
  CHECK(config_error("[system]\nname = tripling\n").key_path == "system.name");

  const auto range = config_error(std::string(kMinimal) + "[grid]\nepsilon_max = 0.1\nepsilon_min = 0.2\n");
  CHECK(range.key_path == "grid.epsilon_min");
  CHECK(range.line == 5);
  CHECK_THAT(std::string(range.what()), ContainsSubstring("exceeds"));

  for (const char* body : {"[grid]\nepsilon = 0.1, 0.2\n", "[grid]\nepsilon = 0.1\nepsilon_max = 0.2\n",
                           "[grid]\nn = 3, 2\n", "[grid]\ndelta = 0.1, 0.3\n", "[grid]\nnum_pairs = 4\n",
                           "[grid]\nmdim_window = 1\n", "[grid]\nnum_omega = 0\n", "[grid]\nnum_omega = -3\n",
                           "[grid]\nnum_omega = 2.5\n", "[budget]\nbackend = fastest\n",
                           "[measures]\ncurves = katok, kattok\n", "[measures]\ncurves = ks, ks\n",
                           "[measures]\ncandidates = bernoulli(0.5,0.6)\n",
                           "[measures]\ncandidates = lebesgue\n",
                           "[measures]\ncandidates = bernoulli(0.5,0.5); bernoulli(0.5,0.5)\n"}) {
    INFO(body);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + body), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/rdsmdim.cfg"), ConfigError);
}

TEST_CASE("config hash ignores order, comments and whitespace") {
  const auto a = parse_config("seed = 3\n[system]\nname = doubling\n[grid]\nn = 1..4\nnum_omega = 1\n");
  const auto b = parse_config("# reordered\nseed=3\n[grid]\nnum_omega = 1\nn = 1..4\n\n[system]\n  name = doubling\n");
  CHECK(a.hash == b.hash);
  CHECK(a.canonical == b.canonical);
  const auto c = parse_config("seed = 4\n[system]\nname = doubling\n[grid]\nn = 1..4\nnum_omega = 1\n");
  CHECK(a.hash != c.hash);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"full_shift.cfg", "doubling.cfg", "product_shift.cfg"}) {
    INFO(name);
    CHECK_NOTHROW(load_config(std::string(RDSMDIM_CONFIG_DIR) + "/" + name));
  }
}

TEST_CASE("csv fields and numbers") {
  using namespace io_detail;
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_number(std::nan("")) == "nan");
  CHECK(csv_number(-HUGE_VAL) == "-inf");
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(csv_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("results survive a JSON round trip") {
  const auto r = small_result();
  RunManifest m;
  m.run_id = r.run_id;
  m.config_hash = "0123456789abcdef";
  m.seed = r.seed;
  m.completion = {{CurveKind::katok, "x", std::numeric_limits<double>::infinity(), "done"}};
  m.started_at = "2026-01-01T00:00:00Z";
  const auto j = result_to_json(r, m);
  CHECK_FALSE(j["manifest"].contains("started_at"));
  const auto text = j.dump();
  const auto back = result_from_json(nlohmann::json::parse(text));
  CHECK(result_to_json(back.result, back.manifest).dump() == text);
  CHECK(back.manifest.completion[0].epsilon == std::numeric_limits<double>::infinity());
  REQUIRE(back.result.cells.size() == r.cells.size());
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    CHECK(back.result.cells[i].log_count == r.cells[i].log_count);
    CHECK(back.result.cells[i].entropy_slope == r.cells[i].entropy_slope);
  }
  CHECK_THROWS(result_from_json(nlohmann::json::parse(R"({"manifest": {}})")));
}

TEST_CASE("manifest timestamps are opt-in") {
  RunManifest m;
  m.started_at = utc_timestamp();
  CHECK(m.started_at.size() == 20);
  CHECK(m.started_at.back() == 'Z');
  CHECK(manifest_to_json(m, true).contains("finished_at"));
  CHECK_FALSE(manifest_to_json(m, false).contains("started_at"));
}

TEST_CASE("result files are written and deterministic") {
  const auto r = small_result();
  RunManifest m;
  m.run_id = "io";
  m.started_at = "2026-01-01T00:00:00Z";
  const auto root = std::filesystem::temp_directory_path() / "rdsmdim-test-io";
  std::filesystem::remove_all(root);
  const auto files = write_results(r, m, root / "a", OutputFormat::both);
  CHECK(files.size() == 7);
  for (const char* name : {"cells.csv", "mdim.csv", "curves.csv", "gaps.csv", "suite.csv", "results.json",
                           "run_manifest.json"})
    CHECK(std::filesystem::exists(root / "a" / name));
  const auto header = slurp(root / "a" / "cells.csv").substr(0, 14);
  CHECK(header == "run_id,system,");
  CHECK_THAT(slurp(root / "a" / "cells.csv"), ContainsSubstring("\"io, \"\"quoted\"\"\""));

  m.started_at = "2026-02-02T00:00:00Z";
  write_results(small_result(), m, root / "b", OutputFormat::both);
  for (const char* name : {"cells.csv", "mdim.csv", "curves.csv", "gaps.csv", "suite.csv", "results.json"})
    CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
  CHECK(slurp(root / "a" / "run_manifest.json") != slurp(root / "b" / "run_manifest.json"));

  const auto csv_only = write_results(r, m, root / "c", OutputFormat::csv);
  CHECK_FALSE(std::filesystem::exists(root / "c" / "results.json"));
  CHECK(csv_only.size() == 6);
  std::filesystem::remove_all(root);
  CHECK_THROWS_AS(output_format_from_string("xml"), std::invalid_argument);
}
