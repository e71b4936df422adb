#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conesolve/error.hpp"
#include "conesolve/geometry.hpp"
#include "conesolve/nonlinearity.hpp"

namespace conesolve {

struct LambdaProvenance {
  double beta = 0.0;
  double m_value = 0.0;
  double k1_norm = 0.0;
  std::optional<double> mu1;
  std::optional<double> delta;
};

/// Admissible interval for one lambda_j. The two existence results use
/// different endpoint conventions, so both inclusivities are recorded.
struct LambdaRange {
  std::size_t component = 0;
  double lower = 0.0;  // 0 means any positive value
  double upper = 0.0;
  bool lower_inclusive = false;
  bool upper_inclusive = true;
  bool empty = false;
  LambdaProvenance provenance;

  bool contains(double lambda) const {
    if (empty || !(lambda > 0.0)) return false;
    const bool above = lower_inclusive ? lambda >= lower : lambda > lower;
    const bool below = upper_inclusive ? lambda <= upper : lambda < upper;
    return above && below;
  }
};

namespace detail {

inline double sampled_m(const Nonlinearity& nl, std::size_t j, std::span<const double> beta, const Grid& grid,
                        double m_safety) {
  const double m = max_over_domain(nl, j, beta, grid);
  return nl.depends_on_x(j) ? m * m_safety : m;
}

}  // namespace detail

/// Per-component intervals for systems:
///   j != i0:  0 < lambda_j <= beta_j / (m_j(beta) ||K(1)||)
///   j == i0:  mu1 / delta < lambda_i0 <= beta_i0 / (m_i0(beta) ||K(1)||)
/// `m_safety` inflates m_j for x-dependent f_j, whose grid maximum can
/// undershoot the true maximum.
inline std::vector<LambdaRange> system_ranges(const Nonlinearity& nl, const Grid& grid, std::span<const double> beta,
                                              std::size_t i0, double delta, double k1_norm, double mu1,
                                              double m_safety = 1.0) {
  if (i0 >= nl.n()) throw Error(ErrorCode::InvalidArgument, "i0 out of range");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(k1_norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "||K(1)|| must be positive");
  if (beta.size() != nl.n()) throw Error(ErrorCode::InvalidArgument, "beta must have n entries");
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (!(beta[j] > 0.0 && beta[j] <= nl.box()[j]))
      throw Error(ErrorCode::BoxViolation, "beta_" + std::to_string(j + 1) + " must lie in (0, rho]");

  std::vector<LambdaRange> out;
  for (std::size_t j = 0; j < nl.n(); ++j) {
    const double m = detail::sampled_m(nl, j, beta, grid, m_safety);
    if (!(m > 0.0)) {
      if (j != i0)
        throw Error(ErrorCode::ConditionCViolation,
                    "m_" + std::to_string(j + 1) + "(beta) = " + std::to_string(m) + " is not positive");
      throw Error(ErrorCode::NonpositiveM, "m_" + std::to_string(j + 1) + "(beta) is not positive");
    }
    LambdaRange r;
    r.component = j;
    r.upper = beta[j] / (m * k1_norm);
    r.upper_inclusive = true;
    r.lower_inclusive = false;
    r.provenance = {beta[j], m, k1_norm, std::nullopt, std::nullopt};
    if (j == i0) {
      r.lower = mu1 / delta;
      r.provenance.mu1 = mu1;
      r.provenance.delta = delta;
    }
    r.empty = r.lower >= r.upper;
    out.push_back(r);
  }
  return out;
}

struct SingleRangeResult {
  LambdaRange range;
  double argmax = 0.0;  // s attaining the sup
  std::vector<std::pair<double, double>> curve;  // (s, s / (M(s) ||K(1)||))
};

/// Interval mu1/delta <= lambda < sup_{0<s<=rho} s / (M(s) ||K(1)||) for a
/// single equation. The sup is found on a log-uniform grid of s in
/// [rho * 1e-8, rho] and refined by golden-section search around the best
/// sample.
inline SingleRangeResult single_range(const Nonlinearity& nl, const Grid& grid, double rho, double delta, double rho0,
                                      double k1_norm, double mu1, std::size_t grid_points = 2000,
                                      double m_safety = 1.0) {
  if (nl.n() != 1) throw Error(ErrorCode::InvalidArgument, "single_range needs a scalar nonlinearity");
  if (!(rho > 0.0 && rho <= nl.box()[0])) throw Error(ErrorCode::BoxViolation, "rho must lie in (0, box bound]");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(rho0 > 0.0 && rho0 < rho)) throw Error(ErrorCode::InvalidArgument, "rho0 must lie in (0, rho)");
  if (!(k1_norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "||K(1)|| must be positive");
  if (grid_points < 100) throw Error(ErrorCode::InvalidArgument, "grid_points must be at least 100");

  const auto ratio = [&](double s) {
    const double point[1] = {s};
    const double m = detail::sampled_m(nl, 0, point, grid, m_safety);
    if (!(m > 0.0)) throw Error(ErrorCode::NonpositiveM, "M(s) <= 0 at s = " + std::to_string(s));
    return s / (m * k1_norm);
  };

  SingleRangeResult out;
  out.curve.reserve(grid_points);
  const double decades = 8.0;
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(grid_points - 1);
    const double s = (k + 1 == grid_points) ? rho : rho * std::pow(10.0, -decades * (1.0 - t));
    out.curve.emplace_back(s, ratio(s));
    if (out.curve[k].second > out.curve[best].second) best = k;
  }

  double lo = out.curve[best == 0 ? 0 : best - 1].first;
  double hi = out.curve[std::min(best + 1, grid_points - 1)].first;
  double sup = out.curve[best].second;
  double arg = out.curve[best].first;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = ratio(a), fb = ratio(b);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = ratio(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = ratio(b);
    }
  }
  for (auto [s, v] : {std::pair{a, fa}, std::pair{b, fb}}) {
    if (v > sup) {
      sup = v;
      arg = s;
    }
  }

  out.argmax = arg;
  auto& r = out.range;
  r.component = 0;
  r.lower = mu1 / delta;
  r.lower_inclusive = true;
  r.upper = sup;
  r.upper_inclusive = false;
  r.empty = r.lower >= r.upper;
  const double at_arg[1] = {arg};
  r.provenance = {arg, detail::sampled_m(nl, 0, at_arg, grid, m_safety), k1_norm, mu1, delta};
  return out;
}

struct GrowthParameters {
  double delta = 0.0;
  double rho0 = 0.0;
};

/// Sweeps delta over {1e-2, ..., 1e4} from the top and, for each, rho0 over
/// min_box * 2^-k. Returns the largest delta that passes check_growth for
/// some rho0, together with the largest such rho0. The rho0 sweep stops once
/// delta * rho0 drops below 1e-6, where the absolute 1e-12 slack in
/// check_growth would let any f pass.
inline std::optional<GrowthParameters> select_growth_parameters(const Nonlinearity& nl, std::size_t i0,
                                                                std::size_t samples, std::uint64_t seed) {
  for (int e = 4; e >= -2; --e) {
    const double delta = std::pow(10.0, e);
    for (int k = 1; k <= 48; ++k) {
      const double rho0 = std::ldexp(nl.min_box(), -k);
      if (delta * rho0 < 1e-6) break;
      if (check_growth(nl, i0, delta, rho0, samples, seed).passed) return GrowthParameters{delta, rho0};
    }
  }
  return std::nullopt;
}

}  // namespace conesolve
