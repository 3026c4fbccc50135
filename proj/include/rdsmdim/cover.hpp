#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "fiber.hpp"

namespace rdsmdim {

/// An open ball or a cylinder set.
struct CoverElement {
  enum class Shape { ball, cylinder };
  Shape shape = Shape::ball;
  FiberPoint center;                // ball
  double radius = 0.0;              // ball, open
  std::vector<std::uint8_t> word;   // cylinder: every sequence starting with this word

  static CoverElement ball(FiberPoint c, double r) { return {Shape::ball, std::move(c), r, {}}; }
  static CoverElement cylinder(std::vector<std::uint8_t> w) { return {Shape::cylinder, {}, 0.0, std::move(w)}; }

  bool contains(const FiberSpace& f, const FiberPoint& x) const {
    if (shape == Shape::ball) return f.distance(center, x) < radius;
    if (x.word.size() < word.size()) return false;
    return std::equal(word.begin(), word.end(), x.word.begin());
  }
};

/// Finite open cover of a fiber with certified geometry.
struct CoverSpec {
  std::vector<CoverElement> elements;
  double diam_cert = 0.0;  // upper bound on every element's diameter
  double leb_cert = 0.0;   // lower bound on the Lebesgue number
  std::string label;

  std::size_t size() const noexcept { return elements.size(); }

  /// When every element is (equal, on the fiber, to) a cylinder of one common
  /// depth and the cylinders are exactly all words of that depth, returns
  /// the depth; otherwise -1.
  int uniform_cylinder_depth(const FiberSpace& f) const {
    if (!f.is_symbolic() || elements.empty()) return -1;
    long depth = -1;
    std::vector<std::vector<std::uint8_t>> words;
    for (const auto& e : elements) {
      std::vector<std::uint8_t> w;
      if (e.shape == CoverElement::Shape::cylinder) {
        w = e.word;
      } else {
        const std::size_t q = open_ball_depth(f, e.radius);
        if (e.center.word.size() < q) return -1;
        w.assign(e.center.word.begin(), e.center.word.begin() + static_cast<std::ptrdiff_t>(q));
      }
      if (depth < 0) depth = static_cast<long>(w.size());
      if (static_cast<long>(w.size()) != depth) return -1;
      words.push_back(std::move(w));
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    const double expected = std::pow(static_cast<double>(f.alphabet), static_cast<double>(depth));
    return static_cast<double>(words.size()) == expected ? static_cast<int>(depth) : -1;
  }
};

/// All cylinders of the given depth.  The Lebesgue certificate is half the
/// true Lebesgue number, which keeps closed balls of that radius inside a
/// cylinder.
inline CoverSpec cylinder_cover(const FiberSpace& f, std::size_t depth) {
  if (!f.is_symbolic()) throw std::invalid_argument("cylinder_cover needs a symbolic fiber");
  CoverSpec cover;
  const auto cloud = cylinder_cloud(f, depth, depth);
  for (const auto& p : cloud.points) cover.elements.push_back(CoverElement::cylinder(p.word));
  cover.diam_cert = f.scale * std::ldexp(1.0, -static_cast<int>(depth));
  cover.leb_cert = cover.diam_cert;
  cover.label = "cylinders(" + std::to_string(depth) + ")";
  return cover;
}

namespace detail {

// Covering radius of a set of circle points (coordinates in [0,1)), in
// coordinate units: half the largest gap.
inline double circle_covering_radius(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double gap = xs.front() + 1.0 - xs.back();
  for (std::size_t i = 1; i < xs.size(); ++i) gap = std::max(gap, xs[i] - xs[i - 1]);
  return 0.5 * gap;
}

}  // namespace detail

/// Balls of radius eps/2 around an eps/4-net of the fiber, with diameter at
/// most eps and Lebesgue number at least eps/4.
///
/// The net is grown by farthest-point insertion on a grid of mesh eps/8
/// (first grid point first, lowest index on ties).  Insertion continues until
/// the covering radius of the net over the whole fiber, not just the grid, is
/// certified to be at most eps/4.
inline CoverSpec net_cover(const FiberSpace& f, double eps, std::size_t max_points = kDefaultMaxCloudPoints) {
  if (!(eps > 0.0)) throw std::invalid_argument("net_cover: eps must be positive");
  if (eps > f.diameter() * (1.0 + 1e-12))
    throw std::invalid_argument("net_cover: eps exceeds the fiber diameter");
  const auto grid = grid_cloud(f, eps / 8.0, max_points);
  const std::size_t m = grid.size();
  const double target = eps / 4.0;

  std::vector<std::size_t> net{0};
  std::vector<double> dist(m);
  for (std::size_t i = 0; i < m; ++i) dist[i] = f.distance(grid.points[0], grid.points[i]);

  // Certified covering radius of the current net over the fiber.
  auto covering_radius = [&](double grid_max) {
    switch (f.kind) {
      case FiberKind::circle: {
        std::vector<double> xs;
        for (auto i : net) xs.push_back(grid.points[i].coords[0]);
        return f.scale * detail::circle_covering_radius(xs);
      }
      case FiberKind::symbolic:
        // ultrametric: a point agrees with some grid word up to the grid depth
        return std::max(grid_max, grid.mesh);
      default:
        return grid_max + 0.5 * grid.mesh;
    }
  };

  double threshold = target;
  while (true) {
    while (true) {
      std::size_t far = 0;
      for (std::size_t i = 1; i < m; ++i)
        if (dist[i] > dist[far]) far = i;
      if (dist[far] <= threshold) break;
      net.push_back(far);
      for (std::size_t i = 0; i < m; ++i) dist[i] = std::min(dist[i], f.distance(grid.points[far], grid.points[i]));
    }
    const double grid_max = *std::max_element(dist.begin(), dist.end());
    const double rho = covering_radius(grid_max);
    if (rho <= target || net.size() == m) break;
    threshold = std::min(threshold, grid_max) - (rho - target);
    if (threshold < 0.0) threshold = 0.0;
  }

  CoverSpec cover;
  const double r = eps / 2.0;
  for (auto i : net) cover.elements.push_back(CoverElement::ball(grid.points[i], r));
  switch (f.kind) {
    case FiberKind::symbolic:
      cover.diam_cert = f.scale * std::ldexp(1.0, -static_cast<int>(open_ball_depth(f, r)));
      break;
    default: cover.diam_cert = std::min(eps, f.diameter()); break;
  }
  cover.leb_cert = target;
  cover.label = "net(" + std::to_string(eps) + ")";
  return cover;
}

/// A finite partition of a fiber into grid cells of diameter at most eps.
/// Circle: arcs [l/N, (l+1)/N).  Cubes: products of equal intervals.
/// Symbolic: cylinders of the shallowest depth with diameter <= eps.
struct PartitionSpec {
  FiberSpace fiber;
  std::vector<std::size_t> cells_per_axis;  // real fibers
  std::size_t depth = 0;                    // symbolic fibers
  double diam_cert = 0.0;

  static PartitionSpec grid(const FiberSpace& f, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("partition: eps must be positive");
    PartitionSpec p;
    p.fiber = f;
    if (f.is_symbolic()) {
      p.depth = cylinder_depth_for_diameter(f, eps);
      p.diam_cert = f.scale * std::ldexp(1.0, -static_cast<int>(p.depth));
      return p;
    }
    if (f.kind == FiberKind::circle) {
      const auto n = static_cast<std::size_t>(std::ceil(f.scale / eps));
      p.cells_per_axis = {std::max<std::size_t>(n, 1)};
      p.diam_cert = std::min(f.scale / static_cast<double>(p.cells_per_axis[0]), f.diameter());
      return p;
    }
    double total = 1.0;
    for (std::size_t j = 0; j < f.dimension; ++j) {
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(f.scale * f.weight(j) / eps)));
      p.cells_per_axis.push_back(n);
      p.diam_cert = std::max(p.diam_cert, f.scale * f.weight(j) / static_cast<double>(n));
      total *= static_cast<double>(n);
    }
    if (total > 9e15) throw BudgetExceeded("partition has too many cells to label");
    return p;
  }

  static PartitionSpec cylinders(const FiberSpace& f, std::size_t depth) {
    if (!f.is_symbolic()) throw std::invalid_argument("cylinder partition needs a symbolic fiber");
    PartitionSpec p;
    p.fiber = f;
    p.depth = depth;
    p.diam_cert = f.scale * std::ldexp(1.0, -static_cast<int>(depth));
    return p;
  }

  double cell_count() const {
    if (fiber.is_symbolic()) return std::pow(static_cast<double>(fiber.alphabet), static_cast<double>(depth));
    double t = 1.0;
    for (auto n : cells_per_axis) t *= static_cast<double>(n);
    return t;
  }

  /// Index of the cell containing x.
  std::uint64_t label(const FiberPoint& x) const {
    std::uint64_t lab = 0;
    if (fiber.is_symbolic()) {
      if (x.word.size() < depth) throw std::invalid_argument("word shorter than the partition depth");
      for (std::size_t i = 0; i < depth; ++i) lab = lab * fiber.alphabet + x.word[i];
      return lab;
    }
    for (std::size_t j = 0; j < cells_per_axis.size(); ++j) {
      const auto n = cells_per_axis[j];
      auto c = static_cast<std::uint64_t>(std::floor(x.coords[j] * static_cast<double>(n)));
      if (c >= n) c = n - 1;
      lab = lab * n + c;
    }
    return lab;
  }
};

}  // namespace rdsmdim
