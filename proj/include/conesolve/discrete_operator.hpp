#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "conesolve/error.hpp"
#include "conesolve/geometry.hpp"

namespace conesolve {

using SparseMatrix = Eigen::SparseMatrix<double>;
using CoefficientFn = std::function<double(double, double)>;

inline CoefficientFn constant_coefficient(double v) {
  return [v](double, double) { return v; };
}

/// Coefficients of L z = -sum a_ij d_ij z + sum b_i d_i z + c z in two
/// dimensions. a21 is a12 by construction.
struct EllipticCoefficients {
  CoefficientFn a11 = constant_coefficient(1.0);
  CoefficientFn a12 = constant_coefficient(0.0);
  CoefficientFn a22 = constant_coefficient(1.0);
  CoefficientFn b1 = constant_coefficient(0.0);
  CoefficientFn b2 = constant_coefficient(0.0);
  CoefficientFn c = constant_coefficient(0.0);

  /// -Laplacian + c0.
  static EllipticCoefficients laplacian(double c0 = 0.0) {
    EllipticCoefficients k;
    k.c = constant_coefficient(c0);
    return k;
  }
};

/// B z = b z + delta dz/dnu with nu the outward normal.
struct BoundarySpec {
  enum class Kind { Dirichlet, Neumann, Robin };

  Kind kind = Kind::Dirichlet;
  CoefficientFn robin_b = constant_coefficient(0.0);

  static BoundarySpec dirichlet() { return {}; }
  static BoundarySpec neumann() { return {Kind::Neumann, constant_coefficient(0.0)}; }
  static BoundarySpec robin(CoefficientFn b) { return {Kind::Robin, std::move(b)}; }
};

inline std::string to_string(BoundarySpec::Kind k) {
  switch (k) {
    case BoundarySpec::Kind::Dirichlet: return "dirichlet";
    case BoundarySpec::Kind::Neumann: return "neumann";
    case BoundarySpec::Kind::Robin: return "robin";
  }
  return "?";
}

struct OperatorDiagnostics {
  bool is_m_matrix = false;
  bool weakly_diagonally_dominant = false;
  /// Smallest eigenvalue of the sampled 2x2 principal coefficient matrix.
  double ellipticity_mu0 = 0.0;
};

struct SolverOptions {
  /// Above this many unknowns the sparse LU is replaced by ILUT-preconditioned BiCGSTAB.
  std::size_t direct_limit = 100000;
  /// Bound on ||A z - g|| / (||A|| ||z|| + ||g||) in the sup norm.
  double residual_tol = 1e-12;
  int max_refinements = 3;
};

/// Factorized (or preconditioned) solver for a fixed matrix. Construction
/// does all the work; solve() is const and reentrant.
class LinearSolver {
 public:
  LinearSolver(std::shared_ptr<const SparseMatrix> matrix, SolverOptions options)
      : matrix_(std::move(matrix)), options_(options) {
    const auto& a = *matrix_;
    std::vector<double> row_abs_sum(static_cast<std::size_t>(a.rows()), 0.0);
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it)
        row_abs_sum[static_cast<std::size_t>(it.row())] += std::abs(it.value());
    for (double s : row_abs_sum) norm_inf_ = std::max(norm_inf_, s);

    if (static_cast<std::size_t>(a.rows()) <= options_.direct_limit) {
      lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
      lu_->analyzePattern(a);
      lu_->factorize(a);
      if (lu_->info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "sparse LU factorization failed: " + lu_->lastErrorMessage());
    } else {
      iterative_ = std::make_unique<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>>();
      iterative_->preconditioner().setDroptol(1e-6);
      iterative_->preconditioner().setFillfactor(20);
      iterative_->setTolerance(1e-15);
      iterative_->setMaxIterations(10000);
      iterative_->compute(a);
      if (iterative_->info() != Eigen::Success)
        throw Error(ErrorCode::SolverFailure, "ILUT preconditioner setup failed");
    }
  }

  bool is_direct() const noexcept { return static_cast<bool>(lu_); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd z = raw_solve(rhs);
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    for (int pass = 0;; ++pass) {
      const Eigen::VectorXd r = rhs - (*matrix_) * z;
      const double scale = norm_inf_ * z.lpNorm<Eigen::Infinity>() + rhs_norm;
      const double rel = scale > 0.0 ? r.lpNorm<Eigen::Infinity>() / scale : 0.0;
      if (!std::isfinite(rel)) throw Error(ErrorCode::SolverFailure, "solve produced non-finite values");
      if (rel <= options_.residual_tol) return z;
      if (pass >= options_.max_refinements)
        throw Error(ErrorCode::SolverFailure, "relative residual " + std::to_string(rel) + " above tolerance");
      z += raw_solve(r);
    }
  }

 private:
  Eigen::VectorXd raw_solve(const Eigen::VectorXd& rhs) const {
    if (lu_) {
      Eigen::VectorXd z = lu_->solve(rhs);
      if (lu_->info() != Eigen::Success) throw Error(ErrorCode::SolverFailure, "sparse LU solve failed");
      return z;
    }
    // BiCGSTAB records iteration statistics in mutable members.
    std::lock_guard lock(*iterative_mutex_);
    Eigen::VectorXd z = iterative_->solve(rhs);
    if (iterative_->info() != Eigen::Success && iterative_->info() != Eigen::NoConvergence)
      throw Error(ErrorCode::SolverFailure, "BiCGSTAB solve failed");
    return z;
  }

  std::shared_ptr<const SparseMatrix> matrix_;
  SolverOptions options_;
  double norm_inf_ = 0.0;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
  std::unique_ptr<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>> iterative_;
  std::unique_ptr<std::mutex> iterative_mutex_ = std::make_unique<std::mutex>();
};

/// The assembled (L, B) system on the interior nodes of a grid, together
/// with its solver. Immutable and cheap to copy.
class DiscreteOperator {
 public:
  DiscreteOperator(std::shared_ptr<const Grid> grid, std::shared_ptr<const SparseMatrix> matrix,
                   OperatorDiagnostics diagnostics, SolverOptions options)
      : grid_(std::move(grid)),
        matrix_(std::move(matrix)),
        diagnostics_(diagnostics),
        solver_(std::make_shared<const LinearSolver>(matrix_, options)) {}

  const std::shared_ptr<const Grid>& grid() const noexcept { return grid_; }
  const SparseMatrix& matrix() const noexcept { return *matrix_; }
  const OperatorDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  const LinearSolver& solver() const noexcept { return *solver_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_->rows()); }

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const SparseMatrix> matrix_;
  OperatorDiagnostics diagnostics_;
  std::shared_ptr<const LinearSolver> solver_;
};

namespace detail {

// Linear combination of interior unknowns: (interior index, weight).
using Combination = std::vector<std::pair<std::ptrdiff_t, double>>;

class RowAssembler {
 public:
  RowAssembler(const Grid& grid, const BoundarySpec& bc) : grid_(grid), bc_(bc) {}

  // Expresses the value at lattice node (i, j) in terms of interior unknowns.
  // Dirichlet and the disk give zero for anything that is not interior.
  Combination value_at(std::ptrdiff_t i, std::ptrdiff_t j) const {
    const Node* n = grid_.at(i, j);
    if (n == nullptr) return {};
    if (n->kind == NodeKind::Interior) return {{n->interior_index, 1.0}};
    if (bc_.kind == BoundarySpec::Kind::Dirichlet || is_disk(grid_.spec())) return {};
    return boundary_value(*n);
  }

 private:
  // One-sided second-order elimination of b u + du/dnu = 0:
  // du/dnu ~ (3 u_0 - 4 u_1 + u_2) / (2h)  =>  u_0 = (4 u_1 - u_2) / (3 + 2 h b).
  Combination along(const Node& n, std::ptrdiff_t di, std::ptrdiff_t dj) const {
    const double b = bc_.kind == BoundarySpec::Kind::Robin ? bc_.robin_b(n.x1, n.x2) : 0.0;
    const double denom = 3.0 + 2.0 * grid_.h() * b;
    const auto i = static_cast<std::ptrdiff_t>(n.i);
    const auto j = static_cast<std::ptrdiff_t>(n.j);
    Combination out;
    for (auto [idx, w] : value_at(i + di, j + dj)) out.emplace_back(idx, 4.0 * w / denom);
    for (auto [idx, w] : value_at(i + 2 * di, j + 2 * dj)) out.emplace_back(idx, -w / denom);
    return out;
  }

  Combination boundary_value(const Node& n) const {
    const bool west = n.i == 0;
    const bool east = n.i == grid_.nx();
    const bool south = n.j == 0;
    const bool north = n.j == grid_.ny();
    const std::ptrdiff_t di = west ? 1 : (east ? -1 : 0);
    const std::ptrdiff_t dj = south ? 1 : (north ? -1 : 0);
    if (di != 0 && dj != 0) {
      // Corner: the normal is undefined; average the two edge eliminations.
      Combination out;
      for (auto [idx, w] : along(n, di, 0)) out.emplace_back(idx, 0.5 * w);
      for (auto [idx, w] : along(n, 0, dj)) out.emplace_back(idx, 0.5 * w);
      return out;
    }
    return along(n, di, dj);
  }

  const Grid& grid_;
  const BoundarySpec& bc_;
};

inline double sample(const CoefficientFn& f, const Node& n, const char* name) {
  const double v = f(n.x1, n.x2);
  if (!std::isfinite(v))
    throw Error(ErrorCode::InvalidArgument,
                std::string("coefficient ") + name + " is not finite at (" + std::to_string(n.x1) + ", " +
                    std::to_string(n.x2) + ")");
  return v;
}

}  // namespace detail

/// Finite-difference discretization of (L, B) on the interior nodes.
///
/// Second derivatives use the 5-point stencil with Shortley-Weller arms at
/// the curved boundary, the mixed derivative a 4-point cross stencil,
/// first-order terms upwind differences. Non-Dirichlet rectangle boundaries
/// are eliminated with a one-sided second-order difference.
inline DiscreteOperator assemble(std::shared_ptr<const Grid> grid, const EllipticCoefficients& coeffs,
                                 const BoundarySpec& bc, SolverOptions options = {}) {
  const Grid& g = *grid;
  const double h = g.h();
  const double h2 = h * h;

  if (bc.kind != BoundarySpec::Kind::Dirichlet) {
    if (is_disk(g.spec()))
      throw Error(ErrorCode::UnsupportedBC, to_string(bc.kind) + " conditions are only supported on rectangles");
    if (g.nx() < 3 || g.ny() < 3)
      throw Error(ErrorCode::DegenerateGrid, "boundary elimination needs at least two interior nodes per direction");
  }
  if (bc.kind == BoundarySpec::Kind::Robin) {
    bool nonzero = false;
    for (const auto& n : g.nodes()) {
      if (n.kind != NodeKind::Boundary) continue;
      const double b = detail::sample(bc.robin_b, n, "b");
      if (b < 0.0) throw Error(ErrorCode::InvalidBoundaryCoefficient, "Robin coefficient b must be nonnegative");
      nonzero = nonzero || b > 0.0;
    }
    if (!nonzero) throw Error(ErrorCode::InvalidBoundaryCoefficient, "Robin coefficient b is identically zero");
  }

  OperatorDiagnostics diag;
  diag.ellipticity_mu0 = std::numeric_limits<double>::infinity();
  bool c_nonzero = false;

  const detail::RowAssembler rows(g, bc);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(g.interior_count() * 9);

  for (std::size_t k = 0; k < g.interior_count(); ++k) {
    const Node& p = g.interior_node(k);
    const double a11 = detail::sample(coeffs.a11, p, "a11");
    const double a12 = detail::sample(coeffs.a12, p, "a12");
    const double a22 = detail::sample(coeffs.a22, p, "a22");
    const double b1 = detail::sample(coeffs.b1, p, "b1");
    const double b2 = detail::sample(coeffs.b2, p, "b2");
    const double c = detail::sample(coeffs.c, p, "c");

    const double mean = 0.5 * (a11 + a22);
    const double mu = mean - std::hypot(0.5 * (a11 - a22), a12);
    if (!(mu > 0.0))
      throw Error(ErrorCode::EllipticityViolation,
                  "coefficient matrix not positive definite at (" + std::to_string(p.x1) + ", " +
                      std::to_string(p.x2) + ")");
    diag.ellipticity_mu0 = std::min(diag.ellipticity_mu0, mu);
    if (c < 0.0) throw Error(ErrorCode::NegativeZerothOrder, "zero-order coefficient c must be nonnegative");
    c_nonzero = c_nonzero || c > 0.0;

    const auto& arm = p.arms;
    std::map<std::pair<std::ptrdiff_t, std::ptrdiff_t>, double> stencil;  // lattice offset -> weight

    const double ex = arm[East], wx = arm[West], ny = arm[North], sy = arm[South];
    stencil[{1, 0}] += -2.0 * a11 / (h2 * ex * (ex + wx));
    stencil[{-1, 0}] += -2.0 * a11 / (h2 * wx * (ex + wx));
    stencil[{0, 0}] += 2.0 * a11 / (h2 * ex * wx);
    stencil[{0, 1}] += -2.0 * a22 / (h2 * ny * (ny + sy));
    stencil[{0, -1}] += -2.0 * a22 / (h2 * sy * (ny + sy));
    stencil[{0, 0}] += 2.0 * a22 / (h2 * ny * sy);

    if (a12 != 0.0) {
      // -2 a12 u_xy with the cross stencil. Diagonal neighbours outside the
      // disk are taken at the boundary value 0.
      const double w = a12 / (2.0 * h2);
      stencil[{1, 1}] += -w;
      stencil[{-1, -1}] += -w;
      stencil[{-1, 1}] += w;
      stencil[{1, -1}] += w;
    }

    if (b1 > 0.0) {
      stencil[{0, 0}] += b1 / (wx * h);
      stencil[{-1, 0}] -= b1 / (wx * h);
    } else if (b1 < 0.0) {
      stencil[{0, 0}] -= b1 / (ex * h);
      stencil[{1, 0}] += b1 / (ex * h);
    }
    if (b2 > 0.0) {
      stencil[{0, 0}] += b2 / (sy * h);
      stencil[{0, -1}] -= b2 / (sy * h);
    } else if (b2 < 0.0) {
      stencil[{0, 0}] -= b2 / (ny * h);
      stencil[{0, 1}] += b2 / (ny * h);
    }
    stencil[{0, 0}] += c;

    const auto row = static_cast<Eigen::Index>(k);
    for (const auto& [offset, weight] : stencil) {
      if (weight == 0.0) continue;
      const auto combo = rows.value_at(static_cast<std::ptrdiff_t>(p.i) + offset.first,
                                       static_cast<std::ptrdiff_t>(p.j) + offset.second);
      for (auto [col, w] : combo) triplets.emplace_back(row, static_cast<Eigen::Index>(col), weight * w);
    }
  }

  if (bc.kind == BoundarySpec::Kind::Neumann && !c_nonzero)
    throw Error(ErrorCode::NeumannRequiresZerothOrder, "pure Neumann problem needs c not identically zero");

  const auto n = static_cast<Eigen::Index>(g.interior_count());
  auto matrix = std::make_shared<SparseMatrix>(n, n);
  matrix->setFromTriplets(triplets.begin(), triplets.end());
  matrix->makeCompressed();

  bool m_matrix = true;
  bool dominant = true;
  {
    std::vector<double> diagonal(static_cast<std::size_t>(n), 0.0);
    std::vector<double> off_sum(static_cast<std::size_t>(n), 0.0);
    std::vector<double> max_off(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
    for (Eigen::Index col = 0; col < matrix->outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(*matrix, col); it; ++it) {
        const auto r = static_cast<std::size_t>(it.row());
        if (it.row() == it.col()) {
          diagonal[r] = it.value();
        } else {
          off_sum[r] += std::abs(it.value());
          max_off[r] = std::max(max_off[r], it.value());
        }
      }
    }
    for (std::size_t r = 0; r < diagonal.size(); ++r) {
      if (!(diagonal[r] > 0.0) || max_off[r] > 1e-14 * diagonal[r]) m_matrix = false;
      if (diagonal[r] < off_sum[r] * (1.0 - 1e-12)) dominant = false;
    }
  }
  diag.is_m_matrix = m_matrix;
  diag.weakly_diagonally_dominant = dominant;

  return DiscreteOperator(std::move(grid), std::move(matrix), diag, options);
}

}  // namespace conesolve
