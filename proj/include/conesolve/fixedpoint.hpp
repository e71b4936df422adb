#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "conesolve/discrete_operator.hpp"
#include "conesolve/error.hpp"
#include "conesolve/greens.hpp"
#include "conesolve/nonlinearity.hpp"

namespace conesolve {

/// T(u) = (lambda_1 K F_1 u, ..., lambda_n K F_n u) on a fixed operator.
struct ProblemInstance {
  DiscreteOperator op;
  Nonlinearity nl;
  std::vector<double> lambdas;

  ProblemInstance(DiscreteOperator op_, Nonlinearity nl_, std::vector<double> lambdas_)
      : op(std::move(op_)), nl(std::move(nl_)), lambdas(std::move(lambdas_)) {
    if (lambdas.size() != nl.n())
      throw Error(ErrorCode::InvalidArgument, "need one lambda per equation (" + std::to_string(nl.n()) + ")");
    for (double l : lambdas)
      if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorCode::InvalidArgument, "lambdas must be positive");
  }

  std::size_t n() const noexcept { return nl.n(); }
};

enum class Direction { FromBelow, FromAbove };

inline std::string to_string(Direction d) { return d == Direction::FromAbove ? "from-above" : "from-below"; }

struct IterationReport {
  VectorGridFunction solution;
  double residual = 0.0;  // ||u - Tu||
  int iterations = 0;
  std::vector<double> history;  // ||u_k|| for k = 0, 1, ...
  Direction direction = Direction::FromAbove;
  bool converged_to_zero = false;
  /// Largest step against the expected direction seen over the whole run
  /// (max of u_{k+1} - u_k from above, u_k - u_{k+1} from below).
  double worst_monotonicity_defect = -std::numeric_limits<double>::infinity();
};

struct SupersolutionCheck {
  bool holds = false;
  double margin = 0.0;  // min_i min_nodes (beta_i - (T beta)_i)
};

struct Subsolution {
  VectorGridFunction alpha;
  double epsilon = 0.0;
};

enum class CertificateStatus { NonzeroPositive, Trivial, NotFixedPoint, NotPositive, OutOfBox };

inline std::string to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::NonzeroPositive: return "nonzero positive solution";
    case CertificateStatus::Trivial: return "trivial solution";
    case CertificateStatus::NotFixedPoint: return "not a fixed point";
    case CertificateStatus::NotPositive: return "not positive";
    case CertificateStatus::OutOfBox: return "outside the box";
  }
  return "?";
}

struct Certificate {
  double residual = 0.0;
  double min_value = 0.0;
  double norm = 0.0;
  bool in_box = false;
  CertificateStatus status = CertificateStatus::NotFixedPoint;

  bool certified() const noexcept { return status == CertificateStatus::NonzeroPositive; }
};

inline constexpr double kOrderSlack = 1e-12;

inline VectorGridFunction apply_T(const ProblemInstance& p, const VectorGridFunction& u) {
  VectorGridFunction out;
  out.components.reserve(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) {
    auto k = apply_K(p.op, nemytskii_apply(p.nl, i, u));
    k.values *= p.lambdas[i];
    out.components.push_back(std::move(k));
  }
  return out;
}

/// T beta <= beta nodewise in every component.
inline SupersolutionCheck check_supersolution(const ProblemInstance& p, const VectorGridFunction& beta) {
  const auto image = apply_T(p, beta);
  const double margin = min_gap(image, beta);
  return {margin >= -kOrderSlack, margin};
}

/// Searches alpha = (0, ..., eps * phi, ..., 0) with phi the principal
/// eigenfunction in component i0, for eps = rho0, rho0/2, ..., rho0 * 2^-20,
/// and returns the first one with T alpha >= alpha.
inline std::optional<Subsolution> construct_subsolution(const ProblemInstance& p, const SpectralEstimate& spectrum,
                                                        std::size_t i0, double delta, double rho0) {
  if (i0 >= p.n()) throw Error(ErrorCode::InvalidArgument, "i0 out of range");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(rho0 > 0.0) || !(rho0 < p.nl.min_box()))
    throw Error(ErrorCode::InvalidArgument, "rho0 must lie in (0, min box bound)");
  if (spectrum.eigenfunction.grid != p.op.grid())
    throw Error(ErrorCode::GridMismatch, "spectrum was computed on a different grid");

  const auto& grid = p.op.grid();
  // Clip round-off negatives so the candidate stays in the cone.
  const Eigen::VectorXd phi = spectrum.eigenfunction.values.cwiseMax(0.0);
  for (int k = 0; k <= 20; ++k) {
    const double eps = std::ldexp(rho0, -k);
    auto alpha = VectorGridFunction::zeros(grid, p.n());
    alpha.components[i0].values = eps * phi;
    if (min_gap(alpha, apply_T(p, alpha)) >= -kOrderSlack) return Subsolution{std::move(alpha), eps};
  }
  return std::nullopt;
}

namespace detail {

// One monotone sequence u_{k+1} = T u_k. Keeps T(u_k) so each step costs
// exactly one application of T.
class MonotoneSequence {
 public:
  MonotoneSequence(const ProblemInstance& p, VectorGridFunction start, Direction dir)
      : p_(p), dir_(dir), current_(std::move(start)), image_(apply_T(p, current_)) {
    report_.direction = dir;
    report_.history.push_back(current_.norm());
    const double defect = step_defect(current_, image_);
    if (defect > kOrderSlack) {
      if (dir == Direction::FromAbove)
        throw Error(ErrorCode::NotASupersolution, "start is not a supersolution (T u exceeds u by " +
                                                      std::to_string(defect) + ")");
      throw Error(ErrorCode::NotASubsolution,
                  "start is not a subsolution (u exceeds T u by " + std::to_string(defect) + ")");
    }
    report_.worst_monotonicity_defect = defect;
    last_diff_ = distance(current_, image_);
  }

  /// ||u_k - T u_k|| for the current iterate.
  double last_diff() const noexcept { return last_diff_; }
  const VectorGridFunction& current() const noexcept { return current_; }

  void step() {
    current_ = std::move(image_);
    ++report_.iterations;
    report_.history.push_back(current_.norm());
    image_ = apply_T(p_, current_);
    const double defect = step_defect(current_, image_);
    report_.worst_monotonicity_defect = std::max(report_.worst_monotonicity_defect, defect);
    if (defect > kOrderSlack)
      throw Error(ErrorCode::MonotonicityViolation,
                  "iterate " + std::to_string(report_.iterations + 1) + " moved against the " + to_string(dir_) +
                      " direction by " + std::to_string(defect) +
                      "; f may be non-monotone or K not positive");
    last_diff_ = distance(current_, image_);
  }

  IterationReport finish(double tol) && {
    report_.residual = last_diff_;
    report_.converged_to_zero = current_.norm() <= 10.0 * tol;
    report_.solution = std::move(current_);
    return std::move(report_);
  }

 private:
  // Amount by which `next` moves against the expected direction.
  double step_defect(const VectorGridFunction& u, const VectorGridFunction& next) const {
    return dir_ == Direction::FromAbove ? -min_gap(next, u) : -min_gap(u, next);
  }

  const ProblemInstance& p_;
  Direction dir_;
  VectorGridFunction current_;
  VectorGridFunction image_;
  IterationReport report_;
  double last_diff_ = 0.0;
};

}  // namespace detail

/// Monotone iteration u_{k+1} = T u_k from a super- (FromAbove) or
/// subsolution (FromBelow). Stops at the first iterate u with
/// ||u - T u|| <= tol; that iterate is the reported solution.
inline IterationReport monotone_iterate(const ProblemInstance& p, const VectorGridFunction& start, Direction direction,
                                        double tol = 1e-9, int max_iter = 10000) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  detail::MonotoneSequence seq(p, start, direction);
  for (int k = 0; k < max_iter && seq.last_diff() > tol; ++k) seq.step();
  if (seq.last_diff() > tol)
    throw Error(ErrorCode::NoConvergence, "monotone iteration did not converge in " + std::to_string(max_iter) +
                                              " iterations (last step " + std::to_string(seq.last_diff()) + ")");
  return std::move(seq).finish(tol);
}

struct BracketReport {
  IterationReport lower;
  IterationReport upper;
  /// Smallest nodewise value of beta_k - alpha_k over all k.
  double min_gap = std::numeric_limits<double>::infinity();
  bool ordered() const noexcept { return min_gap >= -kOrderSlack; }
};

/// Interleaved iteration from a subsolution alpha and supersolution beta,
/// tracking alpha_k <= beta_k at every step.
inline BracketReport bracket_iterate(const ProblemInstance& p, const VectorGridFunction& alpha,
                                     const VectorGridFunction& beta, double tol = 1e-9, int max_iter = 10000) {
  detail::MonotoneSequence lower(p, alpha, Direction::FromBelow);
  detail::MonotoneSequence upper(p, beta, Direction::FromAbove);
  BracketReport out;
  out.min_gap = min_gap(lower.current(), upper.current());
  int k = 0;
  while (lower.last_diff() > tol || upper.last_diff() > tol) {
    if (++k > max_iter) throw Error(ErrorCode::NoConvergence, "bracketing iteration did not converge");
    if (lower.last_diff() > tol) lower.step();
    if (upper.last_diff() > tol) upper.step();
    out.min_gap = std::min(out.min_gap, min_gap(lower.current(), upper.current()));
  }
  out.lower = std::move(lower).finish(tol);
  out.upper = std::move(upper).finish(tol);
  return out;
}

inline Certificate certify(const ProblemInstance& p, const VectorGridFunction& u, double tol) {
  Certificate c;
  c.min_value = u.min_value();
  c.norm = u.norm();
  c.in_box = true;
  for (std::size_t j = 0; j < u.n(); ++j) {
    const auto& v = u.components[j].values;
    if (v.minCoeff() < -1e-10 || v.maxCoeff() > p.nl.box()[j] + 1e-10) c.in_box = false;
  }
  if (!c.in_box) {
    c.residual = std::numeric_limits<double>::infinity();
    c.status = CertificateStatus::OutOfBox;
    return c;
  }
  c.residual = distance(u, apply_T(p, u));
  if (c.residual > tol) {
    c.status = CertificateStatus::NotFixedPoint;
  } else if (c.min_value < -1e-10) {
    c.status = CertificateStatus::NotPositive;
  } else if (c.norm < 10.0 * tol) {
    c.status = CertificateStatus::Trivial;
  } else {
    c.status = CertificateStatus::NonzeroPositive;
  }
  return c;
}

}  // namespace conesolve
