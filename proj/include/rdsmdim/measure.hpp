#pragma once

// Disintegrated measures mu = integral of mu_omega dP and their per-environment
// fiber measures mu_omega.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "system.hpp"

namespace rdsmdim {

enum class MeasureKind { exact_symbolic, exact_product, empirical, point_mass };

inline const char* to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::exact_symbolic: return "exact-symbolic";
    case MeasureKind::exact_product: return "exact-product";
    case MeasureKind::empirical: return "empirical";
    case MeasureKind::point_mass: return "point-mass";
  }
  return "?";
}

struct MeasureSpec {
  MeasureKind kind = MeasureKind::exact_symbolic;
  std::string id;
  std::vector<double> letter_law;               // Bernoulli letters, or Markov initial law
  std::vector<std::vector<double>> transition;  // Markov rows; empty for Bernoulli
  std::size_t sample_size = 10000;              // empirical: ensemble size N
  std::size_t burn_in = 16;                     // empirical: pull-back steps B
  std::size_t condition_length = 0;             // empirical: environment symbols L taken from omega
  std::size_t word_length = 64;                 // empirical on symbolic fibers: letters kept per atom
  FiberPoint point;                             // point mass

  static MeasureSpec bernoulli(std::vector<double> p) {
    MeasureSpec s;
    s.kind = MeasureKind::exact_symbolic;
    s.letter_law = std::move(p);
    return s;
  }
  static MeasureSpec markov(std::vector<std::vector<double>> rows, std::vector<double> initial = {}) {
    MeasureSpec s;
    s.kind = MeasureKind::exact_symbolic;
    s.transition = std::move(rows);
    s.letter_law = std::move(initial);
    return s;
  }
  static MeasureSpec lebesgue() {
    MeasureSpec s;
    s.kind = MeasureKind::exact_product;
    return s;
  }
  static MeasureSpec empirical(std::size_t n, std::size_t burn_in = 16, std::size_t condition_length = 0) {
    MeasureSpec s;
    s.kind = MeasureKind::empirical;
    s.sample_size = n;
    s.burn_in = burn_in;
    s.condition_length = condition_length;
    return s;
  }
  static MeasureSpec point_mass(FiberPoint x) {
    MeasureSpec s;
    s.kind = MeasureKind::point_mass;
    s.point = std::move(x);
    return s;
  }
};

/// A finite atomic measure: points with nonnegative weights summing to one.
struct WeightedCloud {
  PointCloud cloud;
  std::vector<double> weights;
  bool exact = false;  // atoms carry the exact masses of the measure they stand for
};

inline constexpr std::size_t kDefaultMaxAtoms = std::size_t{1} << 16;

/// Count kept both as a double (possibly rounded or infinite) and as its log.
/// While the running value is an exact integer the log is taken of it
/// directly; past 2^53 the log is accumulated by log-sum-exp.
struct LogCount {
  double value = 0.0;
  double log_value = -std::numeric_limits<double>::infinity();

  void add(double v) { add_parts(v, std::log(v)); }
  void add_log(double lv) { add_parts(std::exp(lv), lv); }

 private:
  void add_parts(double v, double lv) {
    value += v;
    if (std::isfinite(value) && value < 0x1.0p53 && v == std::floor(v)) {
      log_value = std::log(value);
      return;
    }
    const double hi = std::max(log_value, lv), lo = std::min(log_value, lv);
    log_value = hi + std::log1p(std::exp(lo - hi));
  }
};

namespace detail {

inline double entropy_of(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// Exact multinomial coefficient when it stays below 2^63.
inline bool exact_multinomial(const std::vector<std::size_t>& parts, double& out) {
  std::uint64_t acc = 1;
  std::uint64_t total = 0;
  for (auto c : parts) {
    for (std::uint64_t i = 1; i <= c; ++i) {
      ++total;
      // acc * total / i is an integer; divide first to stay in range
      const std::uint64_t g = std::gcd(acc, i);
      std::uint64_t next = 0;
      if (__builtin_mul_overflow(acc / g, total / (i / g), &next) || next > (std::uint64_t{1} << 63)) return false;
      acc = next;
    }
  }
  out = static_cast<double>(acc);
  return true;
}

inline double log_multinomial(const std::vector<std::size_t>& parts) {
  double total = 0.0, s = 0.0;
  for (auto c : parts) {
    total += static_cast<double>(c);
    s -= std::lgamma(static_cast<double>(c) + 1.0);
  }
  return s + std::lgamma(total + 1.0);
}

}  // namespace detail

/// The fiber measure mu_omega of a disintegrated measure at one environment.
class FiberMeasure {
 public:
  MeasureKind kind = MeasureKind::exact_symbolic;
  FiberSpace fiber;
  std::size_t atom_budget = kDefaultMaxAtoms;

  // exact-symbolic: sequences y_i = x_i + S_i (mod k) follow the letter or
  // Markov law, where S_i is the total letter rotation applied before step i.
  std::vector<double> letter_law;
  std::vector<std::vector<double>> transition;
  std::vector<std::uint32_t> rotations;
  BaseTrajectory env;

  // empirical and point-mass atoms
  WeightedCloud support;

  bool is_markov() const noexcept { return !transition.empty(); }
  bool has_exact_masses() const noexcept { return kind == MeasureKind::exact_symbolic || kind == MeasureKind::point_mass; }

  /// Total letter rotation S_i applied by the first i maps.
  std::uint32_t offset(std::size_t i) const {
    if (std::all_of(rotations.begin(), rotations.end(), [](auto r) { return r == 0; })) return 0;
    if (i > env.horizon())
      throw std::out_of_range("fiber measure needs " + std::to_string(i) + " environment symbols, have " +
                              std::to_string(env.horizon()));
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < i; ++t) s += rotations.at(env.at(static_cast<std::ptrdiff_t>(t)));
    return static_cast<std::uint32_t>(s % fiber.alphabet);
  }

  /// log mu_omega([w]) for exact symbolic measures.
  double log_cylinder_mass(std::span<const std::uint8_t> w) const {
    require(MeasureKind::exact_symbolic, "log_cylinder_mass");
    const std::size_t k = fiber.alphabet;
    double lm = 0.0;
    std::uint64_t s = 0;
    std::size_t prev = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t y = (w[i] + s) % k;
      const double p = (i == 0 || !is_markov()) ? letter_law[y] : transition[prev][y];
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      lm += std::log(p);
      prev = y;
      if (needs_rotation()) s += rotations.at(env.at(static_cast<std::ptrdiff_t>(i)));
    }
    return lm;
  }

  /// (1/|w|) log mu_omega([w]).  Bernoulli laws sum per distinct letter
  /// probability, so words of equal mass give bit-identical rates.
  double log_cylinder_mass_rate(std::span<const std::uint8_t> w) const {
    require(MeasureKind::exact_symbolic, "log_cylinder_mass_rate");
    if (w.empty()) return 0.0;
    const double len = static_cast<double>(w.size());
    if (is_markov()) return log_cylinder_mass(w) / len;
    const std::size_t k = fiber.alphabet;
    std::map<double, std::size_t> counts;
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      ++counts[letter_law[(w[i] + s) % k]];
      if (needs_rotation()) s += rotations.at(env.at(static_cast<std::ptrdiff_t>(i)));
    }
    double rate = 0.0;
    for (const auto& [p, c] : counts) {
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      rate += (static_cast<double>(c) / len) * std::log(p);
    }
    return rate;
  }

  double cylinder_mass(std::span<const std::uint8_t> w) const {
    require(MeasureKind::exact_symbolic, "cylinder_mass");
    const std::size_t k = fiber.alphabet;
    double m = 1.0;
    std::uint64_t s = 0;
    std::size_t prev = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t y = (w[i] + s) % k;
      m *= (i == 0 || !is_markov()) ? letter_law[y] : transition[prev][y];
      prev = y;
      if (needs_rotation()) s += rotations.at(env.at(static_cast<std::ptrdiff_t>(i)));
    }
    return m;
  }

  /// Shannon entropy of the distribution of depth-L cylinders.
  double depth_entropy(std::size_t depth) const {
    require(MeasureKind::exact_symbolic, "depth_entropy");
    if (depth == 0) return 0.0;
    if (!is_markov()) return static_cast<double>(depth) * detail::entropy_of(letter_law);
    // chain rule with the marginals of the chain started from letter_law
    double h = detail::entropy_of(letter_law);
    std::vector<double> marg = letter_law, next(marg.size());
    for (std::size_t i = 1; i < depth; ++i) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < marg.size(); ++a) {
        if (marg[a] == 0.0) continue;
        h += marg[a] * detail::entropy_of(transition[a]);
        for (std::size_t b = 0; b < marg.size(); ++b) next[b] += marg[a] * transition[a][b];
      }
      marg.swap(next);
    }
    return h;
  }

  /// Smallest number of depth-L cylinders whose total mass exceeds `target`.
  /// Bernoulli laws are handled by type classes at any depth; Markov laws by
  /// enumerating cylinders.
  LogCount min_cylinders_exceeding(std::size_t depth, double target) const {
    require(MeasureKind::exact_symbolic, "min_cylinders_exceeding");
    if (target < 0.0) return {0.0, -std::numeric_limits<double>::infinity()};
    if (depth == 0) return {1.0, 0.0};
    std::vector<std::pair<double, LogCount>> classes;  // (log mass of each member, member count)
    std::vector<double> exact_mass;                    // mass of each member when representable
    if (!is_markov() && type_class_count(depth) <= 4e6) {
      collect_type_classes(depth, classes, exact_mass);
    } else {
      const double count = std::pow(static_cast<double>(fiber.alphabet), static_cast<double>(depth));
      if (count > static_cast<double>(atom_budget))
        throw BudgetExceeded("Markov cylinder enumeration at depth " + std::to_string(depth) + " needs " +
                             std::to_string(count) + " cylinders, budget is " + std::to_string(atom_budget));
      const auto words = cylinder_cloud(fiber, depth, depth, atom_budget);
      std::vector<double> ms;
      for (const auto& p : words.points) {
        const double m = cylinder_mass(p.word);
        if (m > 0.0) ms.push_back(m);
      }
      std::sort(ms.begin(), ms.end(), std::greater<>());
      for (double m : ms) {
        classes.push_back({std::log(m), LogCount{1.0, 0.0}});
        exact_mass.push_back(m);
      }
    }
    LogCount total;
    double cum = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const double lm = classes[c].first;
      const LogCount& members = classes[c].second;
      const double m = exact_mass[c];
      const double class_mass = m > 0.0 && std::isfinite(members.value) ? members.value * m
                                                                        : std::exp(members.log_value + lm);
      if (mass_exceeds(cum + class_mass, target)) {
        const double remaining = target - cum;
        if (m > 0.0 && std::isnormal(m) && remaining / m < 0x1.0p52) {
          total.add(smallest_integer_above(remaining / m));
        } else {
          total.add_log(std::log(std::max(remaining, 0.0)) - lm);
        }
        return total;
      }
      cum += class_mass;
      if (std::isfinite(members.value) && members.value < 0x1.0p52) total.add(members.value);
      else total.add_log(members.log_value);
    }
    throw std::domain_error("cylinder masses sum to " + std::to_string(cum) + ", not above the target " +
                            std::to_string(target));
  }

  /// Atoms standing for the measure.  Exact symbolic: one word per positive-
  /// mass cylinder of `depth`, padded to `word_length`.  Exact product: the
  /// points of a grid of spacing `mesh` with equal weights (an approximation).
  /// Empirical and point masses: their own atoms.
  WeightedCloud atoms(std::size_t depth, std::size_t word_length, double mesh = 0.0) const {
    WeightedCloud wc;
    switch (kind) {
      case MeasureKind::exact_symbolic: {
        const auto words = cylinder_cloud(fiber, depth, std::max(word_length, depth), atom_budget);
        wc.cloud.provenance = CloudProvenance::grid;
        wc.cloud.depth = depth;
        wc.cloud.mesh = words.mesh;
        for (const auto& p : words.points) {
          const double m = cylinder_mass(std::span<const std::uint8_t>(p.word.data(), depth));
          if (m > 0.0) {
            wc.cloud.points.push_back(p);
            wc.weights.push_back(m);
          }
        }
        wc.exact = true;
        return wc;
      }
      case MeasureKind::exact_product: {
        if (!(mesh > 0.0)) mesh = fiber.scale / 256.0;
        wc.cloud = grid_cloud(fiber, mesh, atom_budget);
        wc.weights.assign(wc.cloud.size(), 1.0 / static_cast<double>(wc.cloud.size()));
        wc.exact = false;
        return wc;
      }
      case MeasureKind::empirical:
      case MeasureKind::point_mass: {
        wc = support;
        if (fiber.is_symbolic())
          for (auto& p : wc.cloud.points)
            if (p.word.size() < word_length) p.word.resize(word_length, 0);
        return wc;
      }
    }
    return wc;
  }

  /// A point drawn from mu_omega.
  FiberPoint sample(Rng& rng, std::size_t word_length) const {
    switch (kind) {
      case MeasureKind::exact_symbolic: {
        const std::size_t k = fiber.alphabet;
        std::vector<std::uint8_t> w(word_length);
        std::uint64_t s = 0;
        std::size_t y = 0;
        for (std::size_t i = 0; i < word_length; ++i) {
          y = (i == 0 || !is_markov()) ? rng.categorical(letter_law) : rng.categorical(transition[y]);
          w[i] = static_cast<std::uint8_t>((y + k - s % k) % k);
          if (needs_rotation()) s += rotations.at(env.at(static_cast<std::ptrdiff_t>(i)));
        }
        return FiberPoint::symbolic(std::move(w));
      }
      case MeasureKind::exact_product: {
        std::vector<double> x(fiber.kind == FiberKind::circle ? 1 : fiber.dimension);
        for (auto& c : x) c = rng.uniform();
        return FiberPoint::real(std::move(x));
      }
      case MeasureKind::empirical:
      case MeasureKind::point_mass: {
        FiberPoint p = support.cloud.points[rng.categorical(support.weights)];
        if (fiber.is_symbolic() && p.word.size() < word_length) p.word.resize(word_length, 0);
        return p;
      }
    }
    return {};
  }

 private:
  bool needs_rotation() const {
    return std::any_of(rotations.begin(), rotations.end(), [](auto r) { return r != 0; });
  }

  void require(MeasureKind k, const char* what) const {
    if (kind != k) throw std::logic_error(std::string(what) + " is not available for " + to_string(kind) + " measures");
  }

  // Letters of equal positive probability are interchangeable, so a class is
  // fixed by how many positions use each distinct probability.
  std::vector<std::pair<double, std::size_t>> probability_groups() const {
    std::map<double, std::size_t, std::greater<>> groups;
    for (double p : letter_law)
      if (p > 0.0) ++groups[p];
    return {groups.begin(), groups.end()};
  }

  double type_class_count(std::size_t depth) const {
    // number of compositions of depth into one part per probability group
    const double g = static_cast<double>(probability_groups().size());
    return std::exp(std::lgamma(static_cast<double>(depth) + g) - std::lgamma(g) -
                    std::lgamma(static_cast<double>(depth) + 1.0));
  }

  // Type classes sorted by decreasing member mass.  Rotations permute letters
  // position by position, so the multiset of cylinder masses is that of the
  // unrotated product measure.
  void collect_type_classes(std::size_t depth, std::vector<std::pair<double, LogCount>>& classes,
                            std::vector<double>& exact_mass) const {
    const auto groups = probability_groups();
    const std::size_t g = groups.size();
    struct Type {
      double log_mass;
      double mass;
      LogCount count;
    };
    std::vector<Type> types;
    std::vector<std::size_t> parts(g, 0);
    auto emit = [&] {
      double lm = 0.0, m = 1.0, log_members = detail::log_multinomial(parts);
      double members = 0.0;
      bool exact = detail::exact_multinomial(parts, members);
      for (std::size_t j = 0; j < g; ++j) {
        const auto c = static_cast<double>(parts[j]);
        lm += c * std::log(groups[j].first);
        m *= std::pow(groups[j].first, c);
        log_members += c * std::log(static_cast<double>(groups[j].second));
        if (exact) {
          const double w = std::pow(static_cast<double>(groups[j].second), c);
          exact = w < 0x1.0p53 && members * w < 0x1.0p53;
          members *= w;
        }
      }
      const LogCount cnt = exact ? LogCount{members, std::log(members)} : LogCount{std::exp(log_members), log_members};
      types.push_back({lm, std::isnormal(m) ? m : 0.0, cnt});
    };
    auto rec = [&](auto&& self, std::size_t a, std::size_t left) -> void {
      if (a + 1 == g) {
        parts[a] = left;
        emit();
        return;
      }
      for (std::size_t c = 0; c <= left; ++c) {
        parts[a] = c;
        self(self, a + 1, left - c);
      }
    };
    rec(rec, 0, depth);
    std::stable_sort(types.begin(), types.end(), [](const Type& a, const Type& b) { return a.log_mass > b.log_mass; });
    for (const auto& t : types) {
      classes.push_back({t.log_mass, t.count});
      exact_mass.push_back(t.mass);
    }
  }
};

/// A measure on the bundle, given as the rule omega -> mu_omega.
class DisintegratedMeasure {
 public:
  MeasureSpec spec;
  std::uint64_t seed = 0;
  std::string ergodic = "unknown";  // "yes" when ergodicity follows from the construction
  bool invariant_by_construction = false;
  std::size_t atom_budget = kDefaultMaxAtoms;

  MeasureKind kind() const noexcept { return spec.kind; }
  const std::string& id() const noexcept { return spec.id; }

  FiberMeasure at(const FiberedSystem& sys, const BaseTrajectory& env) const {
    FiberMeasure fm;
    fm.kind = spec.kind;
    fm.fiber = sys.fiber;
    fm.atom_budget = atom_budget;
    fm.env = env;
    switch (spec.kind) {
      case MeasureKind::exact_symbolic:
        fm.letter_law = spec.letter_law;
        fm.transition = spec.transition;
        fm.rotations = sys.maps.rotations;
        break;
      case MeasureKind::exact_product: break;
      case MeasureKind::point_mass:
        fm.support.cloud.points = {spec.point};
        fm.support.cloud.provenance = CloudProvenance::grid;
        fm.support.weights = {1.0};
        fm.support.exact = true;
        break;
      case MeasureKind::empirical: fm.support = build_ensemble(sys, env); break;
    }
    return fm;
  }

 private:
  // Pull-back ensemble: N reference points pushed through the B environment
  // symbols preceding time 0.  The last L of those are omega's own; earlier
  // ones are drawn from the base law.
  WeightedCloud build_ensemble(const FiberedSystem& sys, const BaseTrajectory& env) const {
    const std::size_t N = spec.sample_size, B = spec.burn_in, L = spec.condition_length;
    if (env.past_length() < L)
      throw std::invalid_argument("empirical measure conditions on " + std::to_string(L) +
                                  " past symbols but the environment only has " +
                                  std::to_string(env.past_length()) + "; sample a longer past");
    std::uint64_t key = 0;
    for (std::size_t t = 0; t < L; ++t)
      key = mix64(key ^ env.at(-static_cast<std::ptrdiff_t>(L) + static_cast<std::ptrdiff_t>(t)));
    Rng rng(derive_seed(seed, "empirical-ensemble", {L == 0 ? 0 : key, L}));
    const std::size_t word_length = spec.word_length + B;
    const auto stationary = sys.base.stationary_law();
    WeightedCloud wc;
    wc.cloud.provenance = CloudProvenance::orbit_derived;
    wc.cloud.seed = seed;
    wc.cloud.points.reserve(N);
    std::vector<std::uint32_t> past(B);
    for (std::size_t j = 0; j < N; ++j) {
      FiberPoint x;
      if (sys.fiber.is_symbolic()) {
        std::vector<std::uint8_t> w(word_length);
        for (auto& a : w) a = static_cast<std::uint8_t>(rng.below(sys.fiber.alphabet));
        x = FiberPoint::symbolic(std::move(w));
      } else {
        std::vector<double> c(sys.fiber.kind == FiberKind::circle ? 1 : sys.fiber.dimension);
        for (auto& v : c) v = rng.uniform();
        x = FiberPoint::real(std::move(c));
      }
      // environment at times -B .. -1
      const std::size_t free = B > L ? B - L : 0;
      std::size_t prev = 0;
      for (std::size_t t = 0; t < free; ++t) {
        if (sys.base.alphabet_size == 1) past[t] = 0;
        else if (!sys.base.is_markov() || t == 0) past[t] = static_cast<std::uint32_t>(rng.categorical(stationary));
        else past[t] = static_cast<std::uint32_t>(rng.categorical(sys.base.transition[prev]));
        prev = past[t];
      }
      for (std::size_t t = free; t < B; ++t)
        past[t] = env.at(static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(B));
      for (std::size_t t = 0; t < B; ++t) sys.apply_in_place(past[t], x);
      if (sys.fiber.is_symbolic()) x.word.resize(word_length - B);
      wc.cloud.points.push_back(std::move(x));
    }
    wc.weights.assign(N, 1.0 / static_cast<double>(N));
    wc.exact = true;  // the atoms are the measure
    return wc;
  }
};

/// Builds a disintegrated measure and checks it against the system.
inline DisintegratedMeasure measure_provider(const FiberedSystem& sys, MeasureSpec spec, std::uint64_t seed = 0,
                                             std::size_t atom_budget = kDefaultMaxAtoms) {
  DisintegratedMeasure m;
  m.seed = seed;
  m.atom_budget = atom_budget;
  switch (spec.kind) {
    case MeasureKind::exact_symbolic: {
      if (!sys.is_shift_type_symbolic())
        throw std::invalid_argument("exact symbolic measures need a symbolic shift system");
      const std::size_t k = sys.fiber.alphabet;
      if (!spec.transition.empty()) {
        if (spec.transition.size() != k) throw std::invalid_argument("Markov matrix must be k x k");
        for (const auto& row : spec.transition) {
          if (row.size() != k) throw std::invalid_argument("Markov matrix must be k x k");
          validate_probability_vector(row, "Markov row");
        }
        if (spec.letter_law.empty()) {
          BaseProcess chain = BaseProcess::markov(std::vector<double>(k, 1.0 / static_cast<double>(k)), spec.transition);
          spec.letter_law = chain.stationary_law();
        }
      }
      if (spec.letter_law.size() != k)
        throw std::invalid_argument("letter law has " + std::to_string(spec.letter_law.size()) +
                                    " entries, fiber alphabet has " + std::to_string(k));
      validate_probability_vector(spec.letter_law, "letter law");
      if (spec.transition.empty()) {
        m.invariant_by_construction = true;
        if (sys.base.alphabet_size == 1) m.ergodic = "yes";
      } else {
        // invariant when the initial law is stationary for the chain
        BaseProcess chain = BaseProcess::markov(spec.letter_law, spec.transition);
        const auto pi = chain.stationary_law();
        double diff = 0.0;
        for (std::size_t a = 0; a < k; ++a) diff = std::max(diff, std::fabs(pi[a] - spec.letter_law[a]));
        m.invariant_by_construction = diff < 1e-9;
      }
      break;
    }
    case MeasureKind::exact_product:
      if (sys.fiber.is_symbolic()) throw std::invalid_argument("Lebesgue measure needs a circle or cube fiber");
      m.invariant_by_construction = true;
      if (sys.base.alphabet_size == 1) m.ergodic = "yes";
      break;
    case MeasureKind::empirical:
      if (spec.sample_size == 0) throw std::invalid_argument("empirical measure needs a positive sample size");
      break;
    case MeasureKind::point_mass:
      if (!sys.fiber.contains(spec.point)) throw std::invalid_argument("point mass lies outside the fiber");
      break;
  }
  m.spec = std::move(spec);
  return m;
}

}  // namespace rdsmdim
