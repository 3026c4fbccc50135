#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "system.hpp"

namespace rdsmdim {

enum class CloudProvenance { grid, quasi_random, orbit_derived };

inline const char* to_string(CloudProvenance p) {
  switch (p) {
    case CloudProvenance::grid: return "grid";
    case CloudProvenance::quasi_random: return "quasi-random";
    case CloudProvenance::orbit_derived: return "orbit-derived";
  }
  return "?";
}

/// Finite stand-in for a fiber.
struct PointCloud {
  std::vector<FiberPoint> points;
  CloudProvenance provenance = CloudProvenance::grid;
  double mesh = 0.0;      // grid spacing in metric units (grid provenance)
  std::size_t depth = 0;  // symbolic grids: one representative for every cylinder of this depth
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

inline constexpr std::size_t kDefaultMaxCloudPoints = 1u << 20;

inline double checked_power(double base, std::size_t exp) { return std::pow(base, static_cast<double>(exp)); }

/// All k^depth words of the given depth, padded with zeros to word_length,
/// in lexicographic order.
inline PointCloud cylinder_cloud(const FiberSpace& f, std::size_t depth, std::size_t word_length,
                                 std::size_t max_points = kDefaultMaxCloudPoints) {
  if (!f.is_symbolic()) throw std::invalid_argument("cylinder_cloud needs a symbolic fiber");
  word_length = std::max(word_length, depth);
  const double count = checked_power(static_cast<double>(f.alphabet), depth);
  if (count > static_cast<double>(max_points))
    throw BudgetExceeded("cylinder cloud of depth " + std::to_string(depth) + " needs " +
                         std::to_string(count) + " points, budget is " + std::to_string(max_points));
  PointCloud cloud;
  cloud.provenance = CloudProvenance::grid;
  cloud.depth = depth;
  cloud.mesh = depth == 0 ? f.scale : f.scale * std::ldexp(1.0, -static_cast<int>(depth));
  const auto total = static_cast<std::size_t>(count);
  cloud.points.reserve(total);
  std::vector<std::uint8_t> w(word_length, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    cloud.points.push_back(FiberPoint::symbolic(w));
    // increment the base-k counter held in positions [0, depth), last position fastest
    for (std::size_t p = depth; p-- > 0;) {
      if (++w[p] < f.alphabet) break;
      w[p] = 0;
    }
  }
  return cloud;
}

/// A grid with spacing at most `mesh` (metric units) along every coordinate.
/// Circle: the points j/N.  Cubes: cell centers.  Symbolic: one word per
/// cylinder of the shallowest depth whose cylinders have diameter <= mesh.
inline PointCloud grid_cloud(const FiberSpace& f, double mesh, std::size_t max_points = kDefaultMaxCloudPoints,
                             std::size_t word_length = 0) {
  if (!(mesh > 0.0)) throw std::invalid_argument("grid mesh must be positive");
  if (f.is_symbolic()) {
    const std::size_t depth = cylinder_depth_for_diameter(f, mesh);
    return cylinder_cloud(f, depth, std::max(word_length, depth), max_points);
  }
  PointCloud cloud;
  cloud.provenance = CloudProvenance::grid;
  cloud.mesh = mesh;
  if (f.kind == FiberKind::circle) {
    const double n = std::ceil(f.scale / mesh);
    if (n > static_cast<double>(max_points))
      throw BudgetExceeded("circle grid at mesh " + std::to_string(mesh) + " needs " + std::to_string(n) +
                           " points, budget is " + std::to_string(max_points));
    const auto count = static_cast<std::size_t>(n);
    cloud.points.reserve(count);
    for (std::size_t j = 0; j < count; ++j)
      cloud.points.push_back(FiberPoint::real({static_cast<double>(j) / static_cast<double>(count)}));
    return cloud;
  }
  std::vector<std::size_t> per_axis(f.dimension);
  double total = 1.0;
  for (std::size_t j = 0; j < f.dimension; ++j) {
    per_axis[j] = static_cast<std::size_t>(std::max(1.0, std::ceil(f.scale * f.weight(j) / mesh)));
    total *= static_cast<double>(per_axis[j]);
  }
  if (total > static_cast<double>(max_points))
    throw BudgetExceeded("cube grid at mesh " + std::to_string(mesh) + " needs " + std::to_string(total) +
                         " points, budget is " + std::to_string(max_points));
  const auto count = static_cast<std::size_t>(total);
  cloud.points.reserve(count);
  std::vector<std::size_t> idx(f.dimension, 0);
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> x(f.dimension);
    for (std::size_t j = 0; j < f.dimension; ++j)
      x[j] = (static_cast<double>(idx[j]) + 0.5) / static_cast<double>(per_axis[j]);
    cloud.points.push_back(FiberPoint::real(std::move(x)));
    for (std::size_t j = f.dimension; j-- > 0;) {
      if (++idx[j] < per_axis[j]) break;
      idx[j] = 0;
    }
  }
  return cloud;
}

/// Uniformly random points (i.i.d. letters on symbolic fibers).
inline PointCloud random_cloud(const FiberSpace& f, std::size_t count, std::uint64_t seed,
                               std::size_t word_length = 16) {
  if (count == 0) throw std::invalid_argument("random_cloud: count must be positive");
  PointCloud cloud;
  cloud.provenance = CloudProvenance::quasi_random;
  cloud.seed = seed;
  Rng rng(seed);
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (f.is_symbolic()) {
      std::vector<std::uint8_t> w(word_length);
      for (auto& a : w) a = static_cast<std::uint8_t>(rng.below(f.alphabet));
      cloud.points.push_back(FiberPoint::symbolic(std::move(w)));
    } else {
      std::vector<double> x(f.kind == FiberKind::circle ? 1 : f.dimension);
      for (auto& c : x) c = rng.uniform();
      cloud.points.push_back(FiberPoint::real(std::move(x)));
    }
  }
  return cloud;
}

/// The first `count` points of the orbit of x under env.
inline PointCloud orbit_cloud(const FiberedSystem& sys, const BaseTrajectory& env, const FiberPoint& x,
                              std::size_t count) {
  PointCloud cloud;
  cloud.provenance = CloudProvenance::orbit_derived;
  cloud.seed = env.id;
  cloud.points = fiber_iterate(sys, env, x, count).points;
  return cloud;
}

/// Orbits of every cloud point for n steps, stored flat so that pairwise Bowen
/// distances can be evaluated without recomputing orbits.
class OrbitTable {
 public:
  OrbitTable(const FiberedSystem& sys, const BaseTrajectory& env, const PointCloud& cloud, std::size_t n)
      : fiber_(sys.fiber), n_(n), count_(cloud.size()) {
    if (n == 0) throw std::invalid_argument("OrbitTable: n must be at least 1");
    if (env.horizon() < n)
      throw std::invalid_argument("OrbitTable: environment horizon shorter than n = " + std::to_string(n));
    if (cloud.empty()) throw std::invalid_argument("OrbitTable: empty cloud");
    symbolic_ = fiber_.is_symbolic();
    stride_ = symbolic_ ? cloud.points[0].word.size() : cloud.points[0].coords.size();
    if (symbolic_) sym_.resize(count_ * n_ * stride_);
    else real_.resize(count_ * n_ * stride_);
    for (std::size_t i = 0; i < count_; ++i) {
      FiberPoint x = cloud.points[i];
      const std::size_t len = symbolic_ ? x.word.size() : x.coords.size();
      if (len != stride_) throw std::invalid_argument("OrbitTable: cloud points have unequal sizes");
      for (std::size_t t = 0; t < n_; ++t) {
        const std::size_t off = (i * n_ + t) * stride_;
        if (symbolic_) std::copy(x.word.begin(), x.word.end(), sym_.begin() + static_cast<std::ptrdiff_t>(off));
        else std::copy(x.coords.begin(), x.coords.end(), real_.begin() + static_cast<std::ptrdiff_t>(off));
        if (t + 1 < n_) sys.apply_in_place(env.at(static_cast<std::ptrdiff_t>(t)), x);
      }
    }
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t steps() const noexcept { return n_; }
  const FiberSpace& fiber() const noexcept { return fiber_; }

  /// Fiber distance between T^t x_i and T^t x_j.
  double step_distance(std::size_t i, std::size_t j, std::size_t t) const {
    const std::size_t a = (i * n_ + t) * stride_, b = (j * n_ + t) * stride_;
    if (symbolic_)
      return symbolic_distance({sym_.data() + a, stride_}, {sym_.data() + b, stride_}, fiber_.scale);
    if (fiber_.kind == FiberKind::circle) return fiber_.scale * circle_distance(real_[a], real_[b]);
    double d = 0.0;
    for (std::size_t c = 0; c < stride_; ++c) d = std::max(d, fiber_.weight(c) * std::fabs(real_[a + c] - real_[b + c]));
    return fiber_.scale * d;
  }

  /// Bowen distance d_n between cloud points i and j.
  double distance(std::size_t i, std::size_t j) const {
    double d = 0.0;
    for (std::size_t t = 0; t < n_; ++t) d = std::max(d, step_distance(i, j, t));
    return d;
  }

  /// d_n(i, j) < eps when strict, d_n(i, j) <= eps otherwise; stops at the
  /// first step that violates the bound.
  bool within(std::size_t i, std::size_t j, double eps, bool strict) const {
    for (std::size_t t = 0; t < n_; ++t) {
      const double d = step_distance(i, j, t);
      if (strict ? !(d < eps) : !(d <= eps)) return false;
    }
    return true;
  }

  FiberPoint point(std::size_t i, std::size_t t) const {
    const std::size_t a = (i * n_ + t) * stride_;
    if (symbolic_) return FiberPoint::symbolic({sym_.begin() + static_cast<std::ptrdiff_t>(a),
                                                sym_.begin() + static_cast<std::ptrdiff_t>(a + stride_)});
    return FiberPoint::real({real_.begin() + static_cast<std::ptrdiff_t>(a),
                             real_.begin() + static_cast<std::ptrdiff_t>(a + stride_)});
  }

 private:
  FiberSpace fiber_;
  std::size_t n_ = 0, count_ = 0, stride_ = 0;
  bool symbolic_ = false;
  std::vector<double> real_;
  std::vector<std::uint8_t> sym_;
};

}  // namespace rdsmdim
