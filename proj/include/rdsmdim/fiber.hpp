#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdsmdim {

enum class FiberKind { circle, cube, weighted_cube, symbolic };

inline const char* to_string(FiberKind k) {
  switch (k) {
    case FiberKind::circle: return "circle";
    case FiberKind::cube: return "cube";
    case FiberKind::weighted_cube: return "weighted-cube";
    case FiberKind::symbolic: return "symbolic";
  }
  return "?";
}

/// A point of a fiber.  Real fibers use `coords`, symbolic fibers use `word`
/// (a finite prefix of a one-sided sequence).
struct FiberPoint {
  std::vector<double> coords;
  std::vector<std::uint8_t> word;

  static FiberPoint real(std::vector<double> c) { return FiberPoint{std::move(c), {}}; }
  static FiberPoint symbolic(std::vector<std::uint8_t> w) { return FiberPoint{{}, std::move(w)}; }

  bool operator==(const FiberPoint&) const = default;
};

// Index of the first position where two words differ, or the shorter length
// when one is a prefix of the other (treated as equal at represented precision).
inline std::size_t first_difference(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t len = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < len; ++i)
    if (a[i] != b[i]) return i;
  return len;
}

inline double symbolic_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                double scale = 1.0) {
  const std::size_t len = std::min(a.size(), b.size());
  const std::size_t i = first_difference(a, b);
  return i == len ? 0.0 : scale * std::ldexp(1.0, -static_cast<int>(i));
}

inline double circle_distance(double x, double y) {
  const double d = std::fabs(x - y);
  return std::min(d, 1.0 - d);
}

struct FiberSpace {
  FiberKind kind = FiberKind::circle;
  std::size_t dimension = 1;  // number of coordinates for cubes
  std::size_t alphabet = 2;   // letters of a symbolic fiber
  double scale = 1.0;         // every distance is multiplied by this

  static FiberSpace circle(double scale = 1.0) { return {FiberKind::circle, 1, 0, scale}; }
  static FiberSpace cube(std::size_t d, double scale = 1.0) { return {FiberKind::cube, d, 0, scale}; }
  static FiberSpace weighted_cube(std::size_t d, double scale = 1.0) {
    return {FiberKind::weighted_cube, d, 0, scale};
  }
  static FiberSpace symbolic(std::size_t k, double scale = 1.0) { return {FiberKind::symbolic, 0, k, scale}; }

  bool is_symbolic() const noexcept { return kind == FiberKind::symbolic; }

  /// Metric weight of coordinate j (2^-j on the weighted cube, 1 otherwise).
  double weight(std::size_t j) const {
    return kind == FiberKind::weighted_cube ? std::ldexp(1.0, -static_cast<int>(j)) : 1.0;
  }

  double diameter() const { return kind == FiberKind::circle ? 0.5 * scale : scale; }

  double distance(const FiberPoint& x, const FiberPoint& y) const {
    switch (kind) {
      case FiberKind::circle: return scale * circle_distance(x.coords.at(0), y.coords.at(0));
      case FiberKind::cube:
      case FiberKind::weighted_cube: {
        double d = 0.0;
        for (std::size_t j = 0; j < dimension; ++j)
          d = std::max(d, weight(j) * std::fabs(x.coords.at(j) - y.coords.at(j)));
        return scale * d;
      }
      case FiberKind::symbolic: return symbolic_distance(x.word, y.word, scale);
    }
    return 0.0;
  }

  bool contains(const FiberPoint& x) const {
    switch (kind) {
      case FiberKind::circle:
        return x.coords.size() == 1 && x.coords[0] >= 0.0 && x.coords[0] < 1.0;
      case FiberKind::cube:
      case FiberKind::weighted_cube:
        return x.coords.size() == dimension &&
               std::all_of(x.coords.begin(), x.coords.end(), [](double c) { return c >= 0.0 && c <= 1.0; });
      case FiberKind::symbolic:
        return x.coords.empty() &&
               std::all_of(x.word.begin(), x.word.end(), [&](std::uint8_t a) { return a < alphabet; });
    }
    return false;
  }

  std::string describe() const {
    switch (kind) {
      case FiberKind::circle: return "circle";
      case FiberKind::cube: return "cube(" + std::to_string(dimension) + ")";
      case FiberKind::weighted_cube: return "weighted-cube(" + std::to_string(dimension) + ")";
      case FiberKind::symbolic: return "symbolic(" + std::to_string(alphabet) + ")";
    }
    return "?";
  }
};

// Symbolic scale helpers.  Distances on a symbolic fiber take the values
// scale * 2^-p, p = 0, 1, 2, ...

/// Number of positions p with scale * 2^-p > eps.  Two words are more than eps
/// apart exactly when they differ somewhere among these positions.
inline std::size_t separating_positions(const FiberSpace& f, double eps) {
  std::size_t p = 0;
  while (p < 1024 && f.scale * std::ldexp(1.0, -static_cast<int>(p)) > eps) ++p;
  return p;
}

/// Number of positions p with scale * 2^-p >= eps.  The open ball of radius
/// eps is the cylinder of this depth.
inline std::size_t open_ball_depth(const FiberSpace& f, double eps) {
  std::size_t p = 0;
  while (p < 1024 && f.scale * std::ldexp(1.0, -static_cast<int>(p)) >= eps) ++p;
  return p;
}

/// Smallest depth j with scale * 2^-j <= eps: cylinders of depth j have
/// diameter at most eps.  Same number as separating_positions.
inline std::size_t cylinder_depth_for_diameter(const FiberSpace& f, double eps) {
  return separating_positions(f, eps);
}

/// Depth of the cylinder that the n-th Bowen ball (or Bowen equivalence class)
/// reduces to on a shift-type symbolic system, given the single-step depth q.
inline std::size_t bowen_depth(std::size_t n, std::size_t q) { return q == 0 ? 0 : n + q - 1; }

}  // namespace rdsmdim
