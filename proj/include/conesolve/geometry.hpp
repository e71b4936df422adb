#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "conesolve/error.hpp"

namespace conesolve {

struct Rectangle {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// The open unit disk x1^2 + x2^2 < 1.
struct UnitDisk {};

using DomainSpec = std::variant<Rectangle, UnitDisk>;

inline bool is_disk(const DomainSpec& spec) { return std::holds_alternative<UnitDisk>(spec); }

inline double domain_diameter(const DomainSpec& spec) {
  if (const auto* r = std::get_if<Rectangle>(&spec)) return std::hypot(r->x_max - r->x_min, r->y_max - r->y_min);
  return 2.0;
}

/// Closed-domain membership test, used for sampling x in the closure of the domain.
inline bool contains_closed(const DomainSpec& spec, double x1, double x2) {
  if (const auto* r = std::get_if<Rectangle>(&spec))
    return x1 >= r->x_min && x1 <= r->x_max && x2 >= r->y_min && x2 <= r->y_max;
  return x1 * x1 + x2 * x2 <= 1.0;
}

inline std::string describe(const DomainSpec& spec) {
  if (const auto* r = std::get_if<Rectangle>(&spec)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Rectangle(%g, %g, %g, %g)", r->x_min, r->x_max, r->y_min, r->y_max);
    return buf;
  }
  return "UnitDisk";
}

enum class NodeKind { Interior, Boundary, Exterior };

enum Arm : std::size_t { East = 0, West = 1, North = 2, South = 3 };

struct Node {
  std::size_t i = 0;  // lattice column
  std::size_t j = 0;  // lattice row
  double x1 = 0.0;
  double x2 = 0.0;
  NodeKind kind = NodeKind::Exterior;
  /// Position in the unknown vector, or -1 for non-interior nodes.
  std::ptrdiff_t interior_index = -1;
  /// Fraction of h to the next node or boundary crossing, indexed by Arm.
  std::array<double, 4> arms{1.0, 1.0, 1.0, 1.0};
};

/// Uniform Cartesian lattice covering the domain. Nodes are enumerated
/// row-major by (j, i); interior nodes are numbered in the same order.
class Grid {
 public:
  Grid(DomainSpec spec, double h, double x_origin, double y_origin, std::size_t nx, std::size_t ny,
       std::vector<Node> nodes)
      : spec_(spec), h_(h), x_origin_(x_origin), y_origin_(y_origin), nx_(nx), ny_(ny), nodes_(std::move(nodes)) {
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if (nodes_[k].kind == NodeKind::Interior) interior_.push_back(k);
  }

  const DomainSpec& spec() const noexcept { return spec_; }
  double h() const noexcept { return h_; }
  /// Lattice extent: columns i in [0, nx], rows j in [0, ny].
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double x_origin() const noexcept { return x_origin_; }
  double y_origin() const noexcept { return y_origin_; }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t interior_count() const noexcept { return interior_.size(); }

  const Node& interior_node(std::size_t k) const { return nodes_[interior_[k]]; }

  /// Node at lattice position (i, j), or nullptr when outside the lattice.
  const Node* at(std::ptrdiff_t i, std::ptrdiff_t j) const {
    if (i < 0 || j < 0 || i > static_cast<std::ptrdiff_t>(nx_) || j > static_cast<std::ptrdiff_t>(ny_)) return nullptr;
    return &nodes_[static_cast<std::size_t>(j) * (nx_ + 1) + static_cast<std::size_t>(i)];
  }

 private:
  DomainSpec spec_;
  double h_;
  double x_origin_;
  double y_origin_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> interior_;
};

namespace detail {

inline constexpr std::array<std::ptrdiff_t, 4> kDi{1, -1, 0, 0};
inline constexpr std::array<std::ptrdiff_t, 4> kDj{0, 0, 1, -1};

inline std::size_t lattice_steps(double length, double h) {
  const double steps = length / h;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
    throw Error(ErrorCode::InvalidSpec, "rectangle side length must be an integer multiple of h");
  return static_cast<std::size_t>(rounded);
}

inline std::vector<Node> rectangle_nodes(const Rectangle& r, double h, std::size_t nx, std::size_t ny) {
  std::vector<Node> nodes;
  nodes.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      Node n;
      n.i = i;
      n.j = j;
      n.x1 = (i == nx) ? r.x_max : r.x_min + static_cast<double>(i) * h;
      n.x2 = (j == ny) ? r.y_max : r.y_min + static_cast<double>(j) * h;
      const bool on_edge = i == 0 || j == 0 || i == nx || j == ny;
      n.kind = on_edge ? NodeKind::Boundary : NodeKind::Interior;
      nodes.push_back(n);
    }
  }
  return nodes;
}

inline NodeKind classify_disk(double x1, double x2, double h) {
  const double r = std::hypot(x1, x2);
  if (std::abs(r - 1.0) <= 1e-12 * h) return NodeKind::Boundary;
  return r < 1.0 ? NodeKind::Interior : NodeKind::Exterior;
}

// Distance from an interior point to the unit circle along an axis direction.
inline double disk_crossing(double x1, double x2, Arm d) {
  switch (d) {
    case East: return std::sqrt(1.0 - x2 * x2) - x1;
    case West: return std::sqrt(1.0 - x2 * x2) + x1;
    case North: return std::sqrt(1.0 - x1 * x1) - x2;
    case South: return std::sqrt(1.0 - x1 * x1) + x2;
  }
  return 0.0;
}

}  // namespace detail

/// Builds the lattice for `spec` with mesh step `h`. For the disk, interior
/// nodes next to the circle get Shortley-Weller arm fractions.
inline std::shared_ptr<const Grid> build_grid(const DomainSpec& spec, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidSpec, "mesh step h must be positive");
  if (const auto* r = std::get_if<Rectangle>(&spec)) {
    if (!(r->x_min < r->x_max) || !(r->y_min < r->y_max))
      throw Error(ErrorCode::InvalidSpec, "rectangle bounds are inverted or empty");
  }
  if (!(h < 0.5 * domain_diameter(spec)))
    throw Error(ErrorCode::InvalidSpec, "mesh step h must be smaller than half the domain diameter");

  std::vector<Node> nodes;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;

  if (const auto* r = std::get_if<Rectangle>(&spec)) {
    nx = detail::lattice_steps(r->x_max - r->x_min, h);
    ny = detail::lattice_steps(r->y_max - r->y_min, h);
    x0 = r->x_min;
    y0 = r->y_min;
    nodes = detail::rectangle_nodes(*r, h, nx, ny);
  } else {
    const auto half = static_cast<std::size_t>(std::floor(1.0 / h)) + 1;
    nx = ny = 2 * half;
    x0 = y0 = -static_cast<double>(half) * h;
    nodes.reserve((nx + 1) * (ny + 1));
    for (std::size_t j = 0; j <= ny; ++j) {
      for (std::size_t i = 0; i <= nx; ++i) {
        Node n;
        n.i = i;
        n.j = j;
        n.x1 = (static_cast<double>(i) - static_cast<double>(half)) * h;
        n.x2 = (static_cast<double>(j) - static_cast<double>(half)) * h;
        n.kind = detail::classify_disk(n.x1, n.x2, h);
        nodes.push_back(n);
      }
    }
  }

  std::ptrdiff_t next = 0;
  for (auto& n : nodes)
    if (n.kind == NodeKind::Interior) n.interior_index = next++;
  if (next == 0) throw Error(ErrorCode::DegenerateGrid, "no interior nodes for h = " + std::to_string(h));

  if (is_disk(spec)) {
    const auto lookup = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> const Node& {
      return nodes[static_cast<std::size_t>(j) * (nx + 1) + static_cast<std::size_t>(i)];
    };
    for (auto& n : nodes) {
      if (n.kind != NodeKind::Interior) continue;
      for (std::size_t d = 0; d < 4; ++d) {
        const auto& nb = lookup(static_cast<std::ptrdiff_t>(n.i) + detail::kDi[d],
                                static_cast<std::ptrdiff_t>(n.j) + detail::kDj[d]);
        if (nb.kind != NodeKind::Exterior) {
          n.arms[d] = 1.0;
          continue;
        }
        const double theta = detail::disk_crossing(n.x1, n.x2, static_cast<Arm>(d)) / h;
        n.arms[d] = std::clamp(theta, 1e-12, 1.0);
      }
    }
  }

  return std::make_shared<const Grid>(spec, h, x0, y0, nx, ny, std::move(nodes));
}

}  // namespace conesolve
