#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "base.hpp"
#include "fiber.hpp"

namespace rdsmdim {

enum class MapKind {
  circle_multiply,     // T_s x = m_s x mod 1
  product_shift_tent,  // left shift, the dropped first coordinate re-enters through the tent map
  symbolic_shift,      // left shift followed by a letter rotation a -> a + r_s mod k
};

/// Closed-form counting available for a system.
enum class StructuredHint { none, symbolic_shift, product_shift, linear_circle };

inline const char* to_string(StructuredHint h) {
  switch (h) {
    case StructuredHint::none: return "none";
    case StructuredHint::symbolic_shift: return "symbolic-shift";
    case StructuredHint::product_shift: return "product-shift";
    case StructuredHint::linear_circle: return "linear-circle";
  }
  return "?";
}

struct MapFamily {
  MapKind kind = MapKind::circle_multiply;
  std::vector<std::uint32_t> multipliers;  // circle_multiply: one per base symbol
  std::vector<std::uint32_t> rotations;    // symbolic_shift: one per base symbol
};

inline double tent(double x) { return x < 0.5 ? 2.0 * x : 2.0 - 2.0 * x; }

struct FiberedSystem {
  std::string name;
  BaseProcess base;
  FiberSpace fiber;
  MapFamily maps;
  StructuredHint hint = StructuredHint::none;
  std::vector<double> reference_law;  // letter weights named in "full-shift(k,p)"
  std::size_t guard = 4;              // extra symbols carried by symbolic points

  void apply_in_place(std::uint32_t symbol, FiberPoint& x) const {
    switch (maps.kind) {
      case MapKind::circle_multiply: {
        const double y = static_cast<double>(maps.multipliers.at(symbol)) * x.coords[0];
        x.coords[0] = y - std::floor(y);
        break;
      }
      case MapKind::product_shift_tent: {
        // (x_0, ..., x_{D-1}) -> (x_1, ..., x_{D-1}, tent(x_0)), which keeps Lebesgue measure invariant
        auto& c = x.coords;
        std::rotate(c.begin(), c.begin() + 1, c.end());
        c.back() = tent(c.back());
        break;
      }
      case MapKind::symbolic_shift: {
        auto& w = x.word;
        if (w.empty()) break;
        std::rotate(w.begin(), w.begin() + 1, w.end());
        w.back() = 0;
        const std::uint32_t r = maps.rotations.at(symbol);
        if (r != 0) {
          const auto k = static_cast<std::uint32_t>(fiber.alphabet);
          for (auto& a : w) a = static_cast<std::uint8_t>((a + r) % k);
        }
        break;
      }
    }
  }

  FiberPoint apply(std::uint32_t symbol, const FiberPoint& x) const {
    FiberPoint y = x;
    apply_in_place(symbol, y);
    return y;
  }

  std::uint32_t max_multiplier() const {
    return maps.multipliers.empty() ? 1 : *std::max_element(maps.multipliers.begin(), maps.multipliers.end());
  }

  bool is_shift_type_symbolic() const noexcept {
    return fiber.is_symbolic() && maps.kind == MapKind::symbolic_shift;
  }

  void validate() const {
    base.validate();
    const std::size_t k = base.alphabet_size;
    switch (maps.kind) {
      case MapKind::circle_multiply:
        if (fiber.kind != FiberKind::circle) throw std::invalid_argument("multiplication maps need a circle fiber");
        if (maps.multipliers.size() != k) throw std::invalid_argument("need one multiplier per base symbol");
        for (auto m : maps.multipliers)
          if (m == 0) throw std::invalid_argument("multipliers must be positive integers");
        break;
      case MapKind::product_shift_tent:
        if (fiber.kind != FiberKind::weighted_cube && fiber.kind != FiberKind::cube)
          throw std::invalid_argument("the product shift needs a cube fiber");
        if (fiber.dimension < 1 || fiber.dimension > 64)
          throw std::invalid_argument("product-shift dimension must be in [1, 64]");
        break;
      case MapKind::symbolic_shift:
        if (!fiber.is_symbolic()) throw std::invalid_argument("shift maps need a symbolic fiber");
        if (fiber.alphabet < 1 || fiber.alphabet > 256)
          throw std::invalid_argument("symbolic alphabet must be in [1, 256]");
        if (maps.rotations.size() != k) throw std::invalid_argument("need one letter rotation per base symbol");
        break;
    }
    if (!(fiber.scale > 0.0) || !std::isfinite(fiber.scale))
      throw std::invalid_argument("fiber scale must be positive and finite");
  }
};

/// How to build a system: a catalog entry, or a fully custom system.
struct SystemSpec {
  std::string catalog;
  std::optional<FiberedSystem> custom;
  std::optional<bool> two_sided;  // overrides the base default when set
  std::size_t guard = 4;
  double scale = 1.0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_number(const std::string& tok, std::string_view context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty())
    throw std::invalid_argument("malformed number '" + tok + "' in " + std::string(context));
  return v;
}

// "name(a,(b,c))" -> name and flat numeric list {a,b,c}.
inline std::pair<std::string, std::vector<double>> parse_call(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, {}};
  if (s.back() != ')') throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
  std::string name = trim(std::string_view(s).substr(0, open));
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  int depth = 0;
  for (char& c : inner) {
    if (c == '(') ++depth, c = ' ';
    else if (c == ')') --depth, c = ' ';
    if (depth < 0) throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
  }
  if (depth != 0) throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
  std::vector<double> args;
  std::size_t start = 0;
  while (start <= inner.size()) {
    auto comma = inner.find(',', start);
    if (comma == std::string::npos) comma = inner.size();
    std::string tok = trim(std::string_view(inner).substr(start, comma - start));
    if (!tok.empty()) args.push_back(parse_number(tok, s));
    else if (comma != inner.size() || !args.empty()) throw std::invalid_argument("empty argument in '" + s + "'");
    start = comma + 1;
  }
  return {name, args};
}

inline std::size_t as_count(double v, std::string_view what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9)
    throw std::invalid_argument(std::string(what) + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline FiberedSystem make_system(const SystemSpec& spec) {
  FiberedSystem sys;
  if (spec.custom) {
    sys = *spec.custom;
  } else {
    auto [name, args] = detail::parse_call(spec.catalog);
    sys.name = name;
    if (name == "doubling") {
      if (!args.empty()) throw std::invalid_argument("doubling takes no arguments");
      sys.base = BaseProcess::deterministic();
      sys.fiber = FiberSpace::circle();
      sys.maps = {MapKind::circle_multiply, {2}, {}};
      sys.hint = StructuredHint::linear_circle;
    } else if (name == "random-expanding") {
      // (m1, m2, p) or (m1..mj, p1..pj)
      std::vector<std::uint32_t> ms;
      std::vector<double> ps;
      if (args.size() == 3) {
        ms = {static_cast<std::uint32_t>(detail::as_count(args[0], "multiplier")),
              static_cast<std::uint32_t>(detail::as_count(args[1], "multiplier"))};
        ps = {args[2], 1.0 - args[2]};
        if (!(args[2] >= 0.0 && args[2] <= 1.0)) throw std::invalid_argument("random-expanding: p outside [0,1]");
      } else if (args.size() >= 2 && args.size() % 2 == 0) {
        const std::size_t j = args.size() / 2;
        for (std::size_t i = 0; i < j; ++i)
          ms.push_back(static_cast<std::uint32_t>(detail::as_count(args[i], "multiplier")));
        ps.assign(args.begin() + static_cast<std::ptrdiff_t>(j), args.end());
      } else {
        throw std::invalid_argument("random-expanding expects (m1,m2,p) or (m1..mj,p1..pj)");
      }
      sys.base = BaseProcess::bernoulli(ps);
      sys.fiber = FiberSpace::circle();
      sys.maps = {MapKind::circle_multiply, ms, {}};
      sys.hint = StructuredHint::linear_circle;
    } else if (name == "product-shift") {
      if (args.size() != 1) throw std::invalid_argument("product-shift expects (D)");
      const std::size_t d = detail::as_count(args[0], "product-shift dimension");
      if (d < 1 || d > 64) throw std::invalid_argument("product-shift dimension must be in [1, 64]");
      sys.base = BaseProcess::deterministic();
      sys.fiber = FiberSpace::weighted_cube(d);
      sys.maps = {MapKind::product_shift_tent, {}, {}};
      sys.hint = StructuredHint::product_shift;
    } else if (name == "full-shift") {
      if (args.empty()) throw std::invalid_argument("full-shift expects (k) or (k,p1..pk)");
      const std::size_t k = detail::as_count(args[0], "alphabet size");
      if (k < 1 || k > 256) throw std::invalid_argument("full-shift alphabet must be in [1, 256]");
      std::vector<double> p(args.begin() + 1, args.end());
      if (p.empty()) p.assign(k, 1.0 / static_cast<double>(k));
      if (p.size() != k) throw std::invalid_argument("full-shift: need k letter weights");
      validate_probability_vector(p, "full-shift letter weights");
      sys.base = BaseProcess::deterministic();
      sys.fiber = FiberSpace::symbolic(k);
      sys.maps = {MapKind::symbolic_shift, {}, {0}};
      sys.hint = StructuredHint::symbolic_shift;
      sys.reference_law = p;
    } else if (name == "random-subshift") {
      // (k, p): with probability p shift, otherwise shift then rotate letters by one.
      std::size_t k = 2;
      double p = 0.5;
      if (args.size() >= 1) k = detail::as_count(args[0], "alphabet size");
      if (args.size() >= 2) p = args[1];
      if (args.size() > 2) throw std::invalid_argument("random-subshift expects () or (k,p)");
      if (k < 2 || k > 256) throw std::invalid_argument("random-subshift alphabet must be in [2, 256]");
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("random-subshift: p outside [0,1]");
      sys.base = BaseProcess::bernoulli({p, 1.0 - p});
      sys.fiber = FiberSpace::symbolic(k);
      sys.maps = {MapKind::symbolic_shift, {}, {0, 1}};
      sys.hint = StructuredHint::symbolic_shift;
      sys.reference_law.assign(k, 1.0 / static_cast<double>(k));
    } else {
      throw std::invalid_argument("unknown system '" + name +
                                  "' (known: doubling, random-expanding, product-shift, full-shift, "
                                  "random-subshift)");
    }
    sys.name = detail::trim(spec.catalog);
  }
  if (spec.two_sided) sys.base.two_sided = *spec.two_sided;
  sys.guard = spec.guard;
  sys.fiber.scale = spec.custom ? sys.fiber.scale * spec.scale : spec.scale;
  sys.validate();
  return sys;
}

inline FiberedSystem make_system(std::string_view catalog) {
  SystemSpec spec;
  spec.catalog = std::string(catalog);
  return make_system(spec);
}

inline BaseTrajectory sample_base(const FiberedSystem& sys, std::uint64_t seed, std::size_t horizon) {
  return sample_base(sys.base, seed, horizon);
}

struct OrbitSegment {
  std::vector<FiberPoint> points;
  BaseTrajectory env;  // symbols at times 0..n-1
};

/// x, T_omega x, ..., T_omega^{n-1} x.  Requires n symbols of environment
/// (the last one is not applied but keeps the window aligned with d_n).
inline OrbitSegment fiber_iterate(const FiberedSystem& sys, const BaseTrajectory& env, const FiberPoint& x,
                                  std::size_t n) {
  if (n == 0) throw std::invalid_argument("fiber_iterate: n must be at least 1");
  if (env.horizon() < n)
    throw std::invalid_argument("fiber_iterate: environment horizon " + std::to_string(env.horizon()) +
                                " shorter than n = " + std::to_string(n));
  OrbitSegment seg;
  seg.env.id = env.id;
  seg.env.symbols.reserve(n);
  seg.points.reserve(n);
  seg.points.push_back(x);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t s = env.at(static_cast<std::ptrdiff_t>(i));
    seg.env.symbols.push_back(s);
    if (i + 1 < n) seg.points.push_back(sys.apply(s, seg.points.back()));
  }
  return seg;
}

}  // namespace rdsmdim
