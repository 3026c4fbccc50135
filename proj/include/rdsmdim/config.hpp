#pragma once

// Key-value configuration grammar for sweeps.
//
//   # comment            ; comment
//   seed = 7             top-level keys come before any section
//   [system]
//   name = full-shift(2)
//
// Values may be wrapped in double quotes.  Lists are comma separated, n
// schedules also accept ranges "a..b".  Candidate measures are separated by
// ';'.  Unknown sections and keys are rejected.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "harness.hpp"
#include "rng.hpp"
#include "system.hpp"

namespace rdsmdim {

struct LoadedConfig {
  SweepConfig sweep;
  bool seed_given = false;
  std::string hash;                    // FNV-1a of the canonical key list, hex
  std::vector<std::string> canonical;  // sorted "section.key=value" lines
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

inline const std::map<std::string, std::vector<std::string>>& config_schema() {
  static const std::map<std::string, std::vector<std::string>> schema = {
      {"", {"seed", "run_id", "suite"}},
      {"system", {"name", "two_sided", "guard", "scale"}},
      {"grid",
       {"epsilon", "epsilon_max", "epsilon_min", "epsilon_ratio", "n", "delta", "num_omega", "num_pairs",
        "mdim_window"}},
      {"measures", {"candidates", "curves"}},
      {"budget", {"max_cloud_points", "max_atoms", "max_cell_seconds", "backend"}},
  };
  return schema;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string suggestion(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = 3;  // only suggest close matches
  for (const auto& c : candidates) {
    const auto d = edit_distance(word, c);
    if (d < best_d) best_d = d, best = c;
  }
  return best.empty() ? std::string() : " (did you mean '" + best + "'?)";
}

inline std::string key_path(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, ConfigEntry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& path) const { return entries_.count(path) != 0; }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    const auto it = entries_.find(path);
    const int line = it == entries_.end() ? 0 : it->second.line;
    std::string msg = path + ": " + what;
    if (line > 0) msg = "line " + std::to_string(line) + ": " + msg;
    throw ConfigError(msg, line, path);
  }

  const std::string& text(const std::string& path) const { return entries_.at(path).value; }

  double number(const std::string& path) const {
    try {
      return parse_number(text(path), path);
    } catch (const std::invalid_argument&) {
      fail(path, "expected a number, got '" + text(path) + "'");
    }
  }

  std::uint64_t unsigned_integer(const std::string& path) const {
    const auto& t = text(path);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
      fail(path, "expected a nonnegative integer, got '" + t + "'");
    try {
      return std::stoull(t);
    } catch (const std::exception&) {
      fail(path, "integer out of range: '" + t + "'");
    }
  }

  std::size_t positive(const std::string& path) const {
    const auto v = unsigned_integer(path);
    if (v == 0) fail(path, "must be positive");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& path) const {
    const auto& t = text(path);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    fail(path, "expected true or false, got '" + t + "'");
  }

  std::vector<double> numbers(const std::string& path) const {
    std::vector<double> out;
    for (const auto& tok : split(text(path), ',')) {
      try {
        out.push_back(parse_number(tok, path));
      } catch (const std::invalid_argument&) {
        fail(path, "expected a list of numbers, got '" + tok + "'");
      }
    }
    return out;
  }

  std::vector<std::size_t> schedule(const std::string& path) const {
    std::vector<std::size_t> out;
    for (const auto& tok : split(text(path), ',')) {
      const auto dots = tok.find("..");
      auto as_int = [&](const std::string& s) -> std::size_t {
        const std::string t = trim(s);
        if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
          fail(path, "expected integers or ranges a..b, got '" + tok + "'");
        return static_cast<std::size_t>(std::stoull(t));
      };
      if (dots == std::string::npos) {
        out.push_back(as_int(tok));
      } else {
        const auto a = as_int(tok.substr(0, dots)), b = as_int(tok.substr(dots + 2));
        if (a > b) fail(path, "empty range '" + tok + "'");
        if (b - a > 100000) fail(path, "range '" + tok + "' is too long");
        for (auto i = a; i <= b; ++i) out.push_back(i);
      }
    }
    return out;
  }

 private:
  std::map<std::string, ConfigEntry> entries_;
};

inline MeasureSpec parse_candidate(const std::string& text, const FiberedSystem& sys, const ConfigReader& r) {
  const std::string path = "measures.candidates";
  std::pair<std::string, std::vector<double>> call;
  try {
    call = parse_call(text);
  } catch (const std::invalid_argument& e) {
    r.fail(path, e.what());
  }
  const auto& [name, args] = call;
  const std::size_t k = sys.fiber.alphabet;
  auto integer = [&](double v, const char* what) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e9)
      r.fail(path, std::string(what) + " in '" + text + "' must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  if (name == "bernoulli") {
    if (args.empty()) r.fail(path, "bernoulli needs letter probabilities");
    return MeasureSpec::bernoulli(args);
  }
  if (name == "markov") {
    if (!sys.fiber.is_symbolic()) r.fail(path, "markov needs a symbolic fiber");
    if (args.size() != k * k && args.size() != k * k + k)
      r.fail(path, "markov on " + std::to_string(k) + " letters takes " + std::to_string(k * k) +
                       " transition entries, optionally followed by " + std::to_string(k) + " initial weights");
    std::vector<std::vector<double>> rows(k);
    for (std::size_t i = 0; i < k; ++i) rows[i].assign(args.begin() + static_cast<std::ptrdiff_t>(i * k),
                                                       args.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    std::vector<double> init(args.begin() + static_cast<std::ptrdiff_t>(k * k), args.end());
    return MeasureSpec::markov(std::move(rows), std::move(init));
  }
  if (name == "lebesgue") {
    if (!args.empty()) r.fail(path, "lebesgue takes no arguments");
    return MeasureSpec::lebesgue();
  }
  if (name == "empirical") {
    if (args.size() > 3) r.fail(path, "empirical takes (N), (N,B) or (N,B,L)");
    MeasureSpec s = MeasureSpec::empirical(10000);
    if (args.size() > 0) s.sample_size = integer(args[0], "sample size");
    if (args.size() > 1) s.burn_in = integer(args[1], "burn-in");
    if (args.size() > 2) s.condition_length = integer(args[2], "condition length");
    return s;
  }
  if (name == "point") {
    if (args.empty()) r.fail(path, "point needs coordinates or letters");
    FiberPoint x;
    if (sys.fiber.is_symbolic()) {
      for (double a : args) x.word.push_back(static_cast<std::uint8_t>(std::min<std::size_t>(integer(a, "letter"), 255)));
    } else {
      x.coords = args;
    }
    return MeasureSpec::point_mass(std::move(x));
  }
  r.fail(path, "unknown measure '" + name + "'" +
                   suggestion(name, {"bernoulli", "markov", "lebesgue", "empirical", "point"}));
}

}  // namespace detail

/// Parses configuration text into a validated sweep configuration with
/// defaults filled in.
inline LoadedConfig parse_config(std::string_view text) {
  using detail::ConfigEntry;
  const auto& schema = detail::config_schema();
  std::map<std::string, ConfigEntry> entries;
  std::string section;
  std::set<std::string> seen_sections;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header", line_no);
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!schema.count(section) || section.empty()) {
        std::vector<std::string> names;
        for (const auto& [s, keys] : schema)
          if (!s.empty()) names.push_back(s);
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]" +
                              detail::suggestion(section, names),
                          line_no, section);
      }
      if (!seen_sections.insert(section).second)
        throw ConfigError("line " + std::to_string(line_no) + ": section [" + section + "] appears twice", line_no,
                          section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    else if (!value.empty() && (value.front() == '"' || value.back() == '"'))
      throw ConfigError("line " + std::to_string(line_no) + ": unbalanced quotes", line_no, key);
    const std::string path = detail::key_path(section, key);
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key", line_no);
    const auto& keys = schema.at(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + path + "'" +
                            detail::suggestion(key, keys),
                        line_no, path);
    if (entries.count(path))
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + path + "' set twice", line_no, path);
    entries[path] = {value, line_no};
  }

  LoadedConfig out;
  for (const auto& [path, e] : entries) out.canonical.push_back(path + "=" + e.value);
  std::sort(out.canonical.begin(), out.canonical.end());
  {
    std::string joined;
    for (const auto& l : out.canonical) joined += l + "\n";
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << fnv1a64(joined);
    out.hash = hex.str();
  }

  const detail::ConfigReader r(entries);
  SweepConfig& cfg = out.sweep;
  if (r.has("seed")) {
    cfg.seed = r.unsigned_integer("seed");
    out.seed_given = true;
  }
  if (r.has("run_id")) {
    cfg.run_id = r.text("run_id");
    if (cfg.run_id.empty() || cfg.run_id.find_first_of(",\n\"") != std::string::npos)
      r.fail("run_id", "must be nonempty without commas or quotes");
  }
  if (r.has("suite")) cfg.run_suite = r.boolean("suite");

  if (!r.has("system.name")) throw ConfigError("missing required key 'system.name'", 0, "system.name");
  cfg.system.catalog = r.text("system.name");
  if (r.has("system.two_sided")) cfg.system.two_sided = r.boolean("system.two_sided");
  if (r.has("system.guard")) cfg.system.guard = static_cast<std::size_t>(r.unsigned_integer("system.guard"));
  if (r.has("system.scale")) {
    cfg.system.scale = r.number("system.scale");
    if (!(cfg.system.scale > 0.0)) r.fail("system.scale", "must be positive");
  }
  FiberedSystem sys;
  try {
    sys = make_system(cfg.system);
  } catch (const std::invalid_argument& e) {
    r.fail("system.name", e.what());
  }

  // scales
  if (r.has("grid.epsilon")) {
    for (const char* k : {"grid.epsilon_max", "grid.epsilon_min", "grid.epsilon_ratio"})
      if (r.has(k)) r.fail(k, "cannot be combined with grid.epsilon");
    cfg.eps_grid = r.numbers("grid.epsilon");
    for (double e : cfg.eps_grid)
      if (!(e > 0.0)) r.fail("grid.epsilon", "values must be positive");
    for (std::size_t i = 1; i < cfg.eps_grid.size(); ++i)
      if (cfg.eps_grid[i] >= cfg.eps_grid[i - 1]) r.fail("grid.epsilon", "values must be strictly decreasing");
  } else {
    const auto defaults = default_eps_grid(sys.fiber);
    double hi = r.has("grid.epsilon_max") ? r.number("grid.epsilon_max") : defaults.front();
    double ratio = r.has("grid.epsilon_ratio") ? r.number("grid.epsilon_ratio") : 0.5;
    double lo = r.has("grid.epsilon_min") ? r.number("grid.epsilon_min") : hi / 8.0;
    if (!(hi > 0.0)) r.fail("grid.epsilon_max", "must be positive");
    if (!(lo > 0.0)) r.fail("grid.epsilon_min", "must be positive");
    if (!(ratio > 0.0 && ratio < 1.0)) r.fail("grid.epsilon_ratio", "must lie in (0, 1)");
    if (lo > hi) {
      const std::string path = r.has("grid.epsilon_min") ? "grid.epsilon_min" : "grid.epsilon_max";
      r.fail(path, "grid.epsilon_min = " + detail::fmt(lo) + " exceeds grid.epsilon_max = " + detail::fmt(hi));
    }
    if (std::log(lo / hi) / std::log(ratio) > 64.0) r.fail("grid.epsilon_ratio", "grid would exceed 64 scales");
    cfg.eps_grid = geometric_grid(hi, lo, ratio);
  }
  if (r.has("grid.n")) {
    cfg.n_schedule = r.schedule("grid.n");
    try {
      validate_schedule(cfg.n_schedule);
    } catch (const std::invalid_argument& e) {
      r.fail("grid.n", e.what());
    }
  }
  if (r.has("grid.delta")) {
    cfg.delta_schedule = r.numbers("grid.delta");
    try {
      validate_delta_schedule(cfg.delta_schedule);
    } catch (const std::invalid_argument& e) {
      r.fail("grid.delta", e.what());
    }
  }
  if (r.has("grid.num_omega")) cfg.num_omega = r.positive("grid.num_omega");
  if (r.has("grid.num_pairs")) {
    cfg.num_pairs = r.positive("grid.num_pairs");
    if (cfg.num_pairs < 8) r.fail("grid.num_pairs", "must be at least 8");
  }
  if (r.has("grid.mdim_window")) {
    cfg.mdim_window = r.positive("grid.mdim_window");
    if (cfg.mdim_window < 2) r.fail("grid.mdim_window", "must be at least 2");
  }

  // candidate measures
  if (r.has("measures.candidates")) {
    std::set<std::string> ids;
    for (const auto& item : detail::split(r.text("measures.candidates"), ';')) {
      if (item.empty()) continue;
      MeasureSpec spec = detail::parse_candidate(item, sys, r);
      spec.id = measure_label(spec);
      try {
        (void)measure_provider(sys, spec, 0);
      } catch (const std::invalid_argument& e) {
        r.fail("measures.candidates", "'" + item + "': " + e.what());
      }
      if (!ids.insert(spec.id).second) r.fail("measures.candidates", "candidate '" + item + "' listed twice");
      cfg.candidates.push_back(std::move(spec));
    }
  }
  if (r.has("measures.curves")) {
    cfg.principles.clear();
    for (const auto& tok : detail::split(r.text("measures.curves"), ',')) {
      bool found = false;
      for (auto p : kAllPrinciples)
        if (tok == to_string(p)) {
          if (std::find(cfg.principles.begin(), cfg.principles.end(), p) != cfg.principles.end())
            r.fail("measures.curves", "'" + tok + "' listed twice");
          cfg.principles.push_back(p);
          found = true;
        }
      if (!found)
        r.fail("measures.curves", "unknown curve '" + tok + "'" +
                                      detail::suggestion(tok, {"ks", "shapira", "katok", "brin-katok"}));
    }
  }

  if (r.has("budget.max_cloud_points")) cfg.max_cloud_points = r.positive("budget.max_cloud_points");
  if (r.has("budget.max_atoms")) cfg.max_atoms = r.positive("budget.max_atoms");
  if (r.has("budget.max_cell_seconds")) {
    cfg.max_cell_seconds = r.number("budget.max_cell_seconds");
    if (!(cfg.max_cell_seconds > 0.0)) r.fail("budget.max_cell_seconds", "must be positive");
  }
  if (r.has("budget.backend")) {
    const auto& b = r.text("budget.backend");
    if (b == "auto") cfg.backend = Backend::automatic;
    else if (b == "structured") cfg.backend = Backend::structured;
    else if (b == "enumerative") cfg.backend = Backend::enumerative;
    else r.fail("budget.backend", "expected auto, structured or enumerative, got '" + b + "'" +
                                      detail::suggestion(b, {"auto", "structured", "enumerative"}));
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rdsmdim
