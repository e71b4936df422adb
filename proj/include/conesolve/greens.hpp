#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "conesolve/discrete_operator.hpp"
#include "conesolve/error.hpp"
#include "conesolve/geometry.hpp"
#include "conesolve/log.hpp"

namespace conesolve {

/// A real value per interior node of a shared grid.
struct GridFunction {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd values;

  static GridFunction constant(std::shared_ptr<const Grid> g, double v) {
    const auto n = static_cast<Eigen::Index>(g->interior_count());
    return {std::move(g), Eigen::VectorXd::Constant(n, v)};
  }

  /// Samples f(x1, x2) at the interior nodes.
  static GridFunction sample(std::shared_ptr<const Grid> g, const std::function<double(double, double)>& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->interior_count()));
    for (std::size_t k = 0; k < g->interior_count(); ++k) {
      const Node& n = g->interior_node(k);
      v[static_cast<Eigen::Index>(k)] = f(n.x1, n.x2);
    }
    return {std::move(g), std::move(v)};
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  double sup_norm() const { return values.size() ? values.lpNorm<Eigen::Infinity>() : 0.0; }
  double min_value() const {
    return values.size() ? values.minCoeff() : std::numeric_limits<double>::infinity();
  }
};

struct SpectralEstimate {
  double r = 0.0;    // spectral radius of K
  double mu1 = 0.0;  // principal characteristic value 1 / r
  GridFunction eigenfunction;  // sup norm 1, nonnegative up to round-off
  int iterations = 0;
  double residual = 0.0;  // ||K phi - r phi||_inf
};

struct KOne {
  GridFunction e;  // K(1)
  double norm = 0.0;
};

struct EPositivityBounds {
  double alpha = 0.0;
  double beta = 0.0;
};

namespace detail {

inline void require_same_grid(const DiscreteOperator& op, const GridFunction& g) {
  if (g.grid != op.grid() || g.size() != op.size())
    throw Error(ErrorCode::GridMismatch, "grid function does not live on the operator's grid");
}

inline void warn_if_not_m_matrix(const DiscreteOperator& op, const char* what) {
  if (!op.diagnostics().is_m_matrix)
    warn(std::string(what) + ": operator is not an M-matrix; discrete positivity of K is not guaranteed");
}

}  // namespace detail

/// Kg = z solving the discrete (L, B) problem with right-hand side g.
inline GridFunction apply_K(const DiscreteOperator& op, const GridFunction& g) {
  detail::require_same_grid(op, g);
  if (!g.values.allFinite()) throw Error(ErrorCode::InvalidArgument, "right-hand side has non-finite values");
  if (g.values.isZero(0.0)) return GridFunction::constant(op.grid(), 0.0);
  return {op.grid(), op.solver().solve(g.values)};
}

inline KOne k_one_norm(const DiscreteOperator& op) {
  auto e = apply_K(op, GridFunction::constant(op.grid(), 1.0));
  const double norm = e.sup_norm();
  return {std::move(e), norm};
}

/// Power iteration on K seeded with the constant function 1. Stops when
/// successive estimates agree to `tol` relative and the eigen-residual is
/// below `tol`.
inline SpectralEstimate spectral_radius(const DiscreteOperator& op, double tol = 1e-10, int max_iter = 10000) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  detail::warn_if_not_m_matrix(op, "spectral_radius");

  GridFunction phi = GridFunction::constant(op.grid(), 1.0);
  double previous = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
  for (int k = 0; k < max_iter; ++k) {
    GridFunction image = apply_K(op, phi);
    const double r = image.sup_norm();
    if (!(r > 0.0)) throw Error(ErrorCode::NoConvergence, "K annihilated the iterate; spectrum is degenerate");
    residual = (image.values - r * phi.values).lpNorm<Eigen::Infinity>();
    if (std::abs(r - previous) <= tol * r && residual <= tol)
      return {r, 1.0 / r, std::move(phi), k + 1, residual};
    previous = r;
    phi.values = image.values / r;
  }
  throw Error(ErrorCode::NoConvergence, "power iteration did not converge in " + std::to_string(max_iter) +
                                            " iterations (residual " + std::to_string(residual) +
                                            "); spectrum may be defective or nearly degenerate");
}

/// Sharpest constants with alpha K(1) <= K g <= beta K(1) nodewise.
inline EPositivityBounds e_positivity_probe(const DiscreteOperator& op, const GridFunction& g) {
  detail::require_same_grid(op, g);
  if (g.min_value() < 0.0) throw Error(ErrorCode::NotPositive, "g has negative entries");
  if (g.values.isZero(0.0)) throw Error(ErrorCode::NotPositive, "g is identically zero");
  detail::warn_if_not_m_matrix(op, "e_positivity_probe");

  const auto e = k_one_norm(op).e;
  const auto kg = apply_K(op, g);
  if (!(e.min_value() > 0.0)) throw Error(ErrorCode::DegenerateE, "K(1) vanishes at an interior node");
  const Eigen::ArrayXd ratio = kg.values.array() / e.values.array();
  return {ratio.minCoeff(), ratio.maxCoeff()};
}

}  // namespace conesolve
