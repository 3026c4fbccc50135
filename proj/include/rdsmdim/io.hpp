#pragma once

// Serialization of sweep results: per-cell and mdim CSV tables, auxiliary
// curve/gap/suite tables, a JSON mirror with the manifest embedded, and the
// run manifest with timestamps.
//
// Numbers are written without locale: CSV uses 17 significant digits, JSON
// the shortest form that reads back to the same double.  Non-finite values
// are written as "nan", "inf" and "-inf" in both.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "harness.hpp"

namespace rdsmdim {

inline constexpr const char* kToolVersion = "0.1.0";

enum class OutputFormat { csv, json, both };

inline OutputFormat output_format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  if (s == "both") return OutputFormat::both;
  throw std::invalid_argument("unknown format '" + s + "' (expected csv, json or both)");
}

struct CompletionEntry {
  CurveKind kind = CurveKind::topological;
  std::string measure_id;
  double epsilon = 0.0;
  std::string status;  // "done" or "skipped"
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string seed_source = "default";  // "default", "config" or "flag"
  std::string tool_version = kToolVersion;
  std::string started_at;   // ISO 8601 UTC, only in run_manifest.json
  std::string finished_at;
  std::vector<CompletionEntry> completion;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// One completion entry per requested (curve, measure, eps) cell group.
inline std::vector<CompletionEntry> completion_map(const SweepConfig& cfg, const SweepResult& res) {
  std::vector<CompletionEntry> out;
  auto status = [&](CurveKind k, const std::string& id, double eps) {
    for (const auto& s : res.skipped)
      if (s.kind == k && s.measure_id == id && s.epsilon == eps) return "skipped";
    return "done";
  };
  for (double eps : cfg.eps_grid) out.push_back({CurveKind::topological, "", eps, status(CurveKind::topological, "", eps)});
  for (const auto& c : res.candidates)
    for (auto p : cfg.principles)
      for (double eps : cfg.eps_grid) {
        const auto k = curve_kind_of(p);
        out.push_back({k, c.id, eps, status(k, c.id, eps)});
      }
  return out;
}

namespace io_detail {

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void csv_row(std::ostream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) os << ',';
    os << f;
    first = false;
  }
  os << '\n';
}

inline nlohmann::json jnum(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double jget(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("malformed number '" + s + "' in results JSON");
  }
  return j.get<double>();
}

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> values, const char* what) {
  for (auto v : values)
    if (s == to_string(v)) return v;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

inline Exactness exactness_from(const std::string& s) {
  return enum_from(s, {Exactness::exact, Exactness::greedy_lower, Exactness::greedy_upper, Exactness::approximate},
                   "exactness");
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// CSV

inline void write_cells_csv(std::ostream& os, const SweepResult& r) {
  using namespace io_detail;
  os << "run_id,system,curve_kind,measure_id,epsilon,n,delta,omega_index,count,exactness,entropy_fixed_n,"
        "entropy_slope,stderr,log_count\n";
  for (const auto& c : r.cells)
    csv_row(os, {csv_field(r.run_id), csv_field(r.system), to_string(c.kind), csv_field(c.measure_id),
                 csv_number(c.epsilon), std::to_string(c.n), csv_number(c.delta), std::to_string(c.omega_index),
                 csv_number(c.count), to_string(c.exactness), csv_number(c.entropy_fixed_n),
                 csv_number(c.entropy_slope), csv_number(c.stderr_), csv_number(c.log_count)});
}

inline void write_mdim_csv(std::ostream& os, const SweepResult& r) {
  using namespace io_detail;
  os << "curve_kind,measure_id,window,slope_upper,slope_lower\n";
  for (const auto& m : r.mdim) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    csv_row(os, {to_string(m.kind), csv_field(m.measure_id), std::to_string(m.estimate.window),
                 csv_number(m.available ? m.estimate.upper : nan), csv_number(m.available ? m.estimate.lower : nan)});
  }
}

inline void write_curves_csv(std::ostream& os, const SweepResult& r) {
  using namespace io_detail;
  os << "curve_kind,measure_id,epsilon,estimate,stderr,num_omega,entropy_fixed_n,upper,lower,delta,dispersion,"
        "backend,exactness\n";
  auto rows = [&](const EntropyCurve& c) {
    for (const auto& e : c.entries)
      csv_row(os, {to_string(c.kind), csv_field(c.measure_id), csv_number(e.epsilon), csv_number(e.estimate),
                   csv_number(e.stderr_), std::to_string(e.num_omega), csv_number(e.fixed_n), csv_number(e.upper),
                   csv_number(e.lower), csv_number(e.delta), csv_number(e.dispersion), csv_field(e.backend),
                   to_string(e.exactness)});
  };
  rows(r.topological);
  for (const auto& c : r.measure_curves) rows(c);
}

inline void write_gaps_csv(std::ostream& os, const SweepResult& r) {
  using namespace io_detail;
  os << "principle,epsilon,topological,measure,best_measure,gap,stderr\n";
  for (const auto& g : r.gaps)
    csv_row(os, {to_string(g.principle), csv_number(g.epsilon), csv_number(g.topological), csv_number(g.measure),
                 csv_field(g.best_measure), csv_number(g.gap), csv_number(g.stderr_)});
}

inline void write_suite_csv(std::ostream& os, const SuiteReport& s) {
  using namespace io_detail;
  os << "check,severity,verdict,instance,witness\n";
  for (const auto& v : s.verdicts)
    csv_row(os, {csv_field(v.check), v.hard ? "hard" : "soft", v.passed ? "pass" : "fail", csv_field(v.instance),
                 csv_field(v.witness)});
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json manifest_to_json(const RunManifest& m, bool with_timestamps) {
  using namespace io_detail;
  nlohmann::json j;
  j["run_id"] = m.run_id;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["seed_source"] = m.seed_source;
  j["tool_version"] = m.tool_version;
  if (with_timestamps) {
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
  }
  j["completion"] = nlohmann::json::array();
  for (const auto& c : m.completion)
    j["completion"].push_back(
        {{"curve_kind", to_string(c.kind)}, {"measure_id", c.measure_id}, {"epsilon", jnum(c.epsilon)}, {"status", c.status}});
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.seed_source = j.at("seed_source").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  if (j.contains("started_at")) m.started_at = j["started_at"].get<std::string>();
  if (j.contains("finished_at")) m.finished_at = j["finished_at"].get<std::string>();
  for (const auto& c : j.at("completion"))
    m.completion.push_back({curve_kind_from_string(c.at("curve_kind").get<std::string>()),
                            c.at("measure_id").get<std::string>(), io_detail::jget(c.at("epsilon")),
                            c.at("status").get<std::string>()});
  return m;
}

inline nlohmann::json curve_to_json(const EntropyCurve& c) {
  using namespace io_detail;
  nlohmann::json j{{"curve_kind", to_string(c.kind)}, {"measure_id", c.measure_id}, {"entries", nlohmann::json::array()}};
  for (const auto& e : c.entries) {
    nlohmann::json trend = nlohmann::json::array();
    for (const auto& [d, v] : e.delta_trend) trend.push_back({jnum(d), jnum(v)});
    j["entries"].push_back({{"epsilon", jnum(e.epsilon)},
                            {"estimate", jnum(e.estimate)},
                            {"stderr", jnum(e.stderr_)},
                            {"num_omega", e.num_omega},
                            {"entropy_fixed_n", jnum(e.fixed_n)},
                            {"upper", jnum(e.upper)},
                            {"lower", jnum(e.lower)},
                            {"delta", jnum(e.delta)},
                            {"delta_trend", trend},
                            {"dispersion", jnum(e.dispersion)},
                            {"backend", e.backend},
                            {"exactness", to_string(e.exactness)}});
  }
  return j;
}

inline EntropyCurve curve_from_json(const nlohmann::json& j) {
  using namespace io_detail;
  EntropyCurve c;
  c.kind = curve_kind_from_string(j.at("curve_kind").get<std::string>());
  c.measure_id = j.at("measure_id").get<std::string>();
  for (const auto& x : j.at("entries")) {
    CurveEntry e;
    e.epsilon = jget(x.at("epsilon"));
    e.estimate = jget(x.at("estimate"));
    e.stderr_ = jget(x.at("stderr"));
    e.num_omega = x.at("num_omega").get<std::size_t>();
    e.fixed_n = jget(x.at("entropy_fixed_n"));
    e.upper = jget(x.at("upper"));
    e.lower = jget(x.at("lower"));
    e.delta = jget(x.at("delta"));
    for (const auto& t : x.at("delta_trend")) e.delta_trend.emplace_back(jget(t.at(0)), jget(t.at(1)));
    e.dispersion = jget(x.at("dispersion"));
    e.backend = x.at("backend").get<std::string>();
    e.exactness = exactness_from(x.at("exactness").get<std::string>());
    c.entries.push_back(std::move(e));
  }
  return c;
}

inline nlohmann::json suite_to_json(const SuiteReport& s) {
  nlohmann::json j{{"instances", s.instances},
                   {"hard_total", s.hard_total()},
                   {"hard_failed", s.hard_failed()},
                   {"soft_total", s.soft_total()},
                   {"soft_failed", s.soft_failed()},
                   {"verdicts", nlohmann::json::array()}};
  for (const auto& v : s.verdicts)
    j["verdicts"].push_back({{"check", v.check},
                             {"severity", v.hard ? "hard" : "soft"},
                             {"verdict", v.passed ? "pass" : "fail"},
                             {"instance", v.instance},
                             {"witness", v.witness}});
  return j;
}

inline SuiteReport suite_from_json(const nlohmann::json& j) {
  SuiteReport s;
  s.instances = j.at("instances").get<std::size_t>();
  for (const auto& v : j.at("verdicts"))
    s.verdicts.push_back({v.at("check").get<std::string>(), v.at("severity").get<std::string>() == "hard",
                          v.at("verdict").get<std::string>() == "pass", v.at("instance").get<std::string>(),
                          v.at("witness").get<std::string>()});
  return s;
}

/// Mirror of every table plus the manifest without its timestamps.
inline nlohmann::json result_to_json(const SweepResult& r, const RunManifest& m) {
  using namespace io_detail;
  nlohmann::json j;
  j["manifest"] = manifest_to_json(m, false);
  j["run_id"] = r.run_id;
  j["system"] = r.system;
  j["seed"] = r.seed;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"curve_kind", to_string(c.kind)},
                          {"measure_id", c.measure_id},
                          {"epsilon", jnum(c.epsilon)},
                          {"n", c.n},
                          {"delta", jnum(c.delta)},
                          {"omega_index", c.omega_index},
                          {"count", jnum(c.count)},
                          {"log_count", jnum(c.log_count)},
                          {"exactness", to_string(c.exactness)},
                          {"entropy_fixed_n", jnum(c.entropy_fixed_n)},
                          {"entropy_slope", jnum(c.entropy_slope)},
                          {"stderr", jnum(c.stderr_)}});
  j["mdim"] = nlohmann::json::array();
  for (const auto& m2 : r.mdim) {
    nlohmann::json slopes = nlohmann::json::array();
    for (double s : m2.estimate.per_window_slopes) slopes.push_back(jnum(s));
    j["mdim"].push_back({{"curve_kind", to_string(m2.kind)},
                         {"measure_id", m2.measure_id},
                         {"available", m2.available},
                         {"window", m2.estimate.window},
                         {"slope_upper", jnum(m2.estimate.upper)},
                         {"slope_lower", jnum(m2.estimate.lower)},
                         {"per_window_slopes", slopes},
                         {"note", m2.note}});
  }
  j["topological"] = curve_to_json(r.topological);
  j["measure_curves"] = nlohmann::json::array();
  for (const auto& c : r.measure_curves) j["measure_curves"].push_back(curve_to_json(c));
  j["gaps"] = nlohmann::json::array();
  for (const auto& g : r.gaps)
    j["gaps"].push_back({{"principle", to_string(g.principle)},
                         {"epsilon", jnum(g.epsilon)},
                         {"topological", jnum(g.topological)},
                         {"measure", jnum(g.measure)},
                         {"best_measure", g.best_measure},
                         {"gap", jnum(g.gap)},
                         {"stderr", jnum(g.stderr_)}});
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : r.skipped)
    j["skipped"].push_back({{"curve_kind", to_string(s.kind)},
                            {"measure_id", s.measure_id},
                            {"epsilon", jnum(s.epsilon)},
                            {"reason", s.reason}});
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : r.candidates)
    j["candidates"].push_back({{"id", c.id},
                               {"kind", to_string(c.kind)},
                               {"ergodic", c.ergodic},
                               {"invariant_by_construction", c.invariant_by_construction}});
  j["suite_ran"] = r.suite_ran;
  j["suite"] = suite_to_json(r.suite);
  return j;
}

struct LoadedResult {
  SweepResult result;
  RunManifest manifest;
};

inline LoadedResult result_from_json(const nlohmann::json& j) {
  using namespace io_detail;
  LoadedResult out;
  out.manifest = manifest_from_json(j.at("manifest"));
  SweepResult& r = out.result;
  r.run_id = j.at("run_id").get<std::string>();
  r.system = j.at("system").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& x : j.at("cells")) {
    Cell c;
    c.kind = curve_kind_from_string(x.at("curve_kind").get<std::string>());
    c.measure_id = x.at("measure_id").get<std::string>();
    c.epsilon = jget(x.at("epsilon"));
    c.n = x.at("n").get<std::size_t>();
    c.delta = jget(x.at("delta"));
    c.omega_index = x.at("omega_index").get<std::size_t>();
    c.count = jget(x.at("count"));
    c.log_count = jget(x.at("log_count"));
    c.exactness = exactness_from(x.at("exactness").get<std::string>());
    c.entropy_fixed_n = jget(x.at("entropy_fixed_n"));
    c.entropy_slope = jget(x.at("entropy_slope"));
    c.stderr_ = jget(x.at("stderr"));
    r.cells.push_back(std::move(c));
  }
  for (const auto& x : j.at("mdim")) {
    MdimRow m;
    m.kind = curve_kind_from_string(x.at("curve_kind").get<std::string>());
    m.measure_id = x.at("measure_id").get<std::string>();
    m.available = x.at("available").get<bool>();
    m.estimate.window = x.at("window").get<std::size_t>();
    m.estimate.upper = jget(x.at("slope_upper"));
    m.estimate.lower = jget(x.at("slope_lower"));
    for (const auto& s : x.at("per_window_slopes")) m.estimate.per_window_slopes.push_back(jget(s));
    m.note = x.at("note").get<std::string>();
    r.mdim.push_back(std::move(m));
  }
  r.topological = curve_from_json(j.at("topological"));
  for (const auto& c : j.at("measure_curves")) r.measure_curves.push_back(curve_from_json(c));
  for (const auto& x : j.at("gaps")) {
    GapRow g;
    g.principle = enum_from(x.at("principle").get<std::string>(),
                            {Principle::ks, Principle::shapira, Principle::katok, Principle::brin_katok}, "principle");
    g.epsilon = jget(x.at("epsilon"));
    g.topological = jget(x.at("topological"));
    g.measure = jget(x.at("measure"));
    g.best_measure = x.at("best_measure").get<std::string>();
    g.gap = jget(x.at("gap"));
    g.stderr_ = jget(x.at("stderr"));
    r.gaps.push_back(std::move(g));
  }
  for (const auto& x : j.at("skipped"))
    r.skipped.push_back({curve_kind_from_string(x.at("curve_kind").get<std::string>()),
                         x.at("measure_id").get<std::string>(), jget(x.at("epsilon")),
                         x.at("reason").get<std::string>()});
  for (const auto& x : j.at("candidates"))
    r.candidates.push_back(
        {x.at("id").get<std::string>(),
         enum_from(x.at("kind").get<std::string>(),
                   {MeasureKind::exact_symbolic, MeasureKind::exact_product, MeasureKind::empirical,
                    MeasureKind::point_mass},
                   "measure kind"),
         x.at("ergodic").get<std::string>(), x.at("invariant_by_construction").get<bool>()});
  r.suite_ran = j.at("suite_ran").get<bool>();
  r.suite = suite_from_json(j.at("suite"));
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

template <class Writer>
std::string render(Writer w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

/// Writes cells.csv, mdim.csv, curves.csv, gaps.csv and suite.csv and/or
/// results.json.  run_manifest.json is always written.
inline std::vector<std::filesystem::path> write_results(const SweepResult& r, const RunManifest& m,
                                                        const std::filesystem::path& dir, OutputFormat format) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(dir / name);
  };
  if (format != OutputFormat::json) {
    put("cells.csv", render([&](std::ostream& os) { write_cells_csv(os, r); }));
    put("mdim.csv", render([&](std::ostream& os) { write_mdim_csv(os, r); }));
    put("curves.csv", render([&](std::ostream& os) { write_curves_csv(os, r); }));
    put("gaps.csv", render([&](std::ostream& os) { write_gaps_csv(os, r); }));
    if (r.suite_ran) put("suite.csv", render([&](std::ostream& os) { write_suite_csv(os, r.suite); }));
  }
  if (format != OutputFormat::csv) put("results.json", result_to_json(r, m).dump(2) + "\n");
  put("run_manifest.json", manifest_to_json(m, true).dump(2) + "\n");
  return written;
}

}  // namespace rdsmdim
