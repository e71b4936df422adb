#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "conesolve/error.hpp"
#include "conesolve/expr.hpp"
#include "conesolve/geometry.hpp"
#include "conesolve/greens.hpp"

namespace conesolve {

/// n grid functions on one grid: the discrete u = (u1, ..., un).
struct VectorGridFunction {
  std::vector<GridFunction> components;

  static VectorGridFunction constant(const std::shared_ptr<const Grid>& g, std::span<const double> values) {
    VectorGridFunction u;
    for (double v : values) u.components.push_back(GridFunction::constant(g, v));
    return u;
  }

  static VectorGridFunction zeros(const std::shared_ptr<const Grid>& g, std::size_t n) {
    return constant(g, std::vector<double>(n, 0.0));
  }

  std::size_t n() const noexcept { return components.size(); }
  const std::shared_ptr<const Grid>& grid() const { return components.at(0).grid; }

  /// max_i ||u_i||_inf
  double norm() const {
    double m = 0.0;
    for (const auto& c : components) m = std::max(m, c.sup_norm());
    return m;
  }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : components) m = std::min(m, c.min_value());
    return m;
  }
};

/// ||a - b|| in the product sup norm.
inline double distance(const VectorGridFunction& a, const VectorGridFunction& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i)
    d = std::max(d, (a.components[i].values - b.components[i].values).lpNorm<Eigen::Infinity>());
  return d;
}

/// Smallest nodewise value of b - a over all components.
inline double min_gap(const VectorGridFunction& a, const VectorGridFunction& b) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.n(); ++i)
    m = std::min(m, (b.components[i].values - a.components[i].values).minCoeff());
  return m;
}

/// The right-hand sides f_i(x, u) on the box prod_j [0, rho_j]. Component
/// indices in this API are zero-based.
class Nonlinearity {
 public:
  Nonlinearity(DomainSpec domain, const std::vector<std::string>& sources, std::vector<double> box)
      : domain_(domain), box_(std::move(box)) {
    if (sources.empty()) throw Error(ErrorCode::InvalidArgument, "a nonlinearity needs at least one component");
    if (sources.size() != box_.size())
      throw Error(ErrorCode::InvalidArgument, "box has " + std::to_string(box_.size()) + " bounds for " +
                                                  std::to_string(sources.size()) + " equations");
    for (double rho : box_)
      if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::InvalidArgument, "box bounds must be positive");
    const auto vars = VariableSet::for_system(sources.size());
    for (const auto& src : sources) exprs_.push_back(parse(src, vars));
  }

  std::size_t n() const noexcept { return exprs_.size(); }
  const Expr& expr(std::size_t i) const { return exprs_.at(i); }
  const std::vector<double>& box() const noexcept { return box_; }
  const DomainSpec& domain() const noexcept { return domain_; }
  double min_box() const { return *std::min_element(box_.begin(), box_.end()); }

  bool depends_on_x(std::size_t i) const { return exprs_.at(i).depends_on("x1") || exprs_.at(i).depends_on("x2"); }

  /// f_i(x, u); `u` has n entries and is not box-checked here.
  double evaluate(std::size_t i, double x1, double x2, std::span<const double> u) const {
    double slots[16];
    std::vector<double> heap;
    double* s = slots;
    if (u.size() + 2 > std::size(slots)) {
      heap.resize(u.size() + 2);
      s = heap.data();
    }
    s[0] = x1;
    s[1] = x2;
    std::copy(u.begin(), u.end(), s + 2);
    return exprs_.at(i)(std::span<const double>(s, u.size() + 2));
  }

 private:
  DomainSpec domain_;
  std::vector<Expr> exprs_;
  std::vector<double> box_;
};

struct Witness {
  double x1 = 0.0;
  double x2 = 0.0;
  std::vector<double> u;
  std::vector<double> v;  // empty for one-point conditions
  double f_u = 0.0;
  double f_v = 0.0;
  std::string note;
};

/// Outcome of a sampled hypothesis check.
struct CheckReport {
  std::string condition;
  bool passed = false;
  std::size_t evaluations = 0;
  std::optional<Witness> witness;

  std::string witness_text() const {
    if (!witness) return "";
    std::ostringstream os;
    os.precision(17);
    const auto vec = [&](const std::vector<double>& w) {
      os << '(';
      for (std::size_t k = 0; k < w.size(); ++k) os << (k ? ", " : "") << w[k];
      os << ')';
    };
    os << "x=(" << witness->x1 << ", " << witness->x2 << ") u=";
    vec(witness->u);
    if (!witness->v.empty()) {
      os << " v=";
      vec(witness->v);
      os << " f(u)=" << witness->f_u << " f(v)=" << witness->f_v;
    } else {
      os << " f(u)=" << witness->f_u;
    }
    if (!witness->note.empty()) os << " [" << witness->note << ']';
    return os.str();
  }

  /// Random sampling cannot certify a universally quantified inequality.
  std::string text() const {
    std::string s = condition + ": ";
    if (passed) return s + "pass (sampled, " + std::to_string(evaluations) + " evaluations)";
    return s + "FAIL, witness " + witness_text();
  }

  std::string csv_row() const {
    std::string w = witness_text();
    std::string quoted = "\"";
    for (char ch : w) quoted += (ch == '"') ? std::string("\"\"") : std::string(1, ch);
    quoted += '"';
    return condition + "," + (passed ? "pass" : "fail") + "," + quoted;
  }
};

namespace detail {

inline std::pair<double, double> random_point(const DomainSpec& domain, std::mt19937_64& rng) {
  if (const auto* r = std::get_if<Rectangle>(&domain)) {
    std::uniform_real_distribution<double> ux(r->x_min, r->x_max), uy(r->y_min, r->y_max);
    return {ux(rng), uy(rng)};
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const double a = u(rng), b = u(rng);
    if (a * a + b * b <= 1.0) return {a, b};
  }
}

}  // namespace detail

/// (F_i u)(x) = f_i(x, u(x)) at every interior node. Values within 1e-10
/// outside the box are clamped; anything further is a BoxViolation.
inline GridFunction nemytskii_apply(const Nonlinearity& nl, std::size_t i, const VectorGridFunction& u) {
  constexpr double slack = 1e-10;
  if (u.n() != nl.n())
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(nl.n()) + " components");
  const auto& grid = u.grid();
  for (const auto& c : u.components)
    if (c.grid != grid) throw Error(ErrorCode::GridMismatch, "components live on different grids");

  const std::size_t n = nl.n();
  const std::size_t nodes = grid->interior_count();
  Eigen::VectorXd out(static_cast<Eigen::Index>(nodes));
  std::vector<double> point(n);
  for (std::size_t k = 0; k < nodes; ++k) {
    const auto idx = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = u.components[j].values[idx];
      const double rho = nl.box()[j];
      if (!(v >= -slack && v <= rho + slack))
        throw Error(ErrorCode::BoxViolation, "u" + std::to_string(j + 1) + " = " + std::to_string(v) +
                                                 " outside [0, " + std::to_string(rho) + "]");
      point[j] = std::clamp(v, 0.0, rho);
    }
    const Node& node = grid->interior_node(k);
    out[idx] = nl.evaluate(i, node.x1, node.x2, point);
  }
  return {grid, std::move(out)};
}

/// Sampled test that f_i(x, .) is non-decreasing on the box: random pairs
/// u <= v, half of them differing in a single component.
inline CheckReport check_monotone(const Nonlinearity& nl, std::size_t i, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be at least 1");
  CheckReport report;
  report.condition = "(a) f" + std::to_string(i + 1) + " non-decreasing";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = nl.n();
  std::vector<double> u(n), v(n);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto [x1, x2] = detail::random_point(nl.domain(), rng);
    for (std::size_t j = 0; j < n; ++j) u[j] = unit(rng) * nl.box()[j];
    v = u;
    if (s % 2 == 0) {
      const std::size_t j = static_cast<std::size_t>(unit(rng) * static_cast<double>(n)) % n;
      v[j] = u[j] + unit(rng) * (nl.box()[j] - u[j]);
    } else {
      for (std::size_t j = 0; j < n; ++j) v[j] = u[j] + unit(rng) * (nl.box()[j] - u[j]);
    }
    try {
      const double fu = nl.evaluate(i, x1, x2, u);
      const double fv = nl.evaluate(i, x1, x2, v);
      report.evaluations += 2;
      if (fu > fv + 1e-12) {
        report.witness = Witness{x1, x2, u, v, fu, fv, ""};
        return report;
      }
    } catch (const EvalDomainError& e) {
      report.witness = Witness{x1, x2, u, v, 0.0, 0.0, e.what()};
      return report;
    }
  }
  report.passed = true;
  return report;
}

/// Sampled test of f_i0(x, u) >= delta * u_i0 on prod [0, rho0], plus a
/// deterministic sweep along the diagonal u = (s, ..., s).
inline CheckReport check_growth(const Nonlinearity& nl, std::size_t i0, double delta, double rho0,
                                std::size_t samples, std::uint64_t seed) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(rho0 > 0.0) || !(rho0 < nl.min_box()))
    throw Error(ErrorCode::InvalidArgument, "rho0 must lie in (0, min box bound)");
  if (i0 >= nl.n()) throw Error(ErrorCode::InvalidArgument, "i0 out of range");

  CheckReport report;
  report.condition = "(b) f" + std::to_string(i0 + 1) + " >= " + detail::format_number(delta) + " u" +
                     std::to_string(i0 + 1) + " on [0, " + detail::format_number(rho0) + "]^n";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = nl.n();
  std::vector<double> u(n);

  const auto probe = [&](double x1, double x2) -> bool {
    try {
      const double fu = nl.evaluate(i0, x1, x2, u);
      ++report.evaluations;
      if (fu < delta * u[i0] - 1e-12) {
        report.witness = Witness{x1, x2, u, {}, fu, 0.0, "delta*u = " + detail::format_number(delta * u[i0])};
        return false;
      }
    } catch (const EvalDomainError& e) {
      report.witness = Witness{x1, x2, u, {}, 0.0, 0.0, e.what()};
      return false;
    }
    return true;
  };

  for (std::size_t s = 0; s < samples; ++s) {
    const auto [x1, x2] = detail::random_point(nl.domain(), rng);
    for (std::size_t j = 0; j < n; ++j) u[j] = unit(rng) * rho0;
    if (!probe(x1, x2)) return report;
  }
  constexpr int sweep = 200;
  for (int k = 1; k <= sweep; ++k) {
    // Linear points on (0, rho0], then log-spaced points down to rho0 * 1e-8.
    for (double s : {rho0 * k / sweep, rho0 * std::pow(1e-8, static_cast<double>(k) / sweep)}) {
      std::fill(u.begin(), u.end(), s);
      const auto [x1, x2] = detail::random_point(nl.domain(), rng);
      if (!probe(x1, x2)) return report;
    }
  }
  report.passed = true;
  return report;
}

/// Nonnegativity of f_i on the box (part of the range condition in (a)).
inline CheckReport check_nonnegative(const Nonlinearity& nl, std::size_t i, std::size_t samples,
                                     std::uint64_t seed) {
  CheckReport report;
  report.condition = "(a) f" + std::to_string(i + 1) + " >= 0";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u(nl.n());
  for (std::size_t s = 0; s < samples; ++s) {
    const auto [x1, x2] = detail::random_point(nl.domain(), rng);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = (s == 0) ? 0.0 : unit(rng) * nl.box()[j];
    try {
      const double fu = nl.evaluate(i, x1, x2, u);
      ++report.evaluations;
      if (fu < -1e-12) {
        report.witness = Witness{x1, x2, u, {}, fu, 0.0, ""};
        return report;
      }
    } catch (const EvalDomainError& e) {
      report.witness = Witness{x1, x2, u, {}, 0.0, 0.0, e.what()};
      return report;
    }
  }
  report.passed = true;
  return report;
}

/// m_i(beta) = max_x f_i(x, beta), taken over interior and boundary grid
/// nodes plus the boundary crossings of the disk arms. Exact for
/// x-independent f; otherwise an O(h) under-approximation.
inline double max_over_domain(const Nonlinearity& nl, std::size_t i, std::span<const double> beta, const Grid& grid) {
  if (beta.size() != nl.n()) throw Error(ErrorCode::InvalidArgument, "beta must have n entries");
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (!(beta[j] >= 0.0 && beta[j] <= nl.box()[j])) throw Error(ErrorCode::BoxViolation, "beta outside the box");

  if (!nl.depends_on_x(i)) return nl.evaluate(i, 0.0, 0.0, beta);

  double best = -std::numeric_limits<double>::infinity();
  const double h = grid.h();
  for (const auto& node : grid.nodes()) {
    if (node.kind == NodeKind::Exterior) continue;
    best = std::max(best, nl.evaluate(i, node.x1, node.x2, beta));
    if (node.kind != NodeKind::Interior) continue;
    for (std::size_t d = 0; d < 4; ++d) {
      if (node.arms[d] >= 1.0) continue;
      const double x1 = node.x1 + static_cast<double>(detail::kDi[d]) * node.arms[d] * h;
      const double x2 = node.x2 + static_cast<double>(detail::kDj[d]) * node.arms[d] * h;
      best = std::max(best, nl.evaluate(i, x1, x2, beta));
    }
  }
  return best;
}

}  // namespace conesolve
