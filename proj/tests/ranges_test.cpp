#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "conesolve/greens.hpp"
#include "conesolve/ranges.hpp"

namespace {

using namespace conesolve;

constexpr double pi = std::numbers::pi;
const double kRho = 15.0 * pi / 64.0;
const double kMu1 = 5.783185962946784;  // first J0 zero squared

Nonlinearity example_system() {
  return Nonlinearity(UnitDisk{}, {"sqrt(max(u1,u2)) + tan(max(u1,u2))", "max(u1,u2)^2"}, {kRho, kRho});
}

const Grid& coarse_disk() {
  static const auto g = build_grid(UnitDisk{}, 0.25);
  return *g;
}

// Brute-force oracle for sup_{0<s<=rho} 4 s / f(s) on a dense uniform grid,
// then a local uniform refinement.
template <class F>
double brute_sup(F f, double rho) {
  double best = 0.0, arg = 0.0;
  const int n = 200000;
  for (int k = 1; k <= n; ++k) {
    const double s = rho * k / n;
    if (const double v = 4 * s / f(s); v > best) best = v, arg = s;
  }
  for (int k = -1000; k <= 1000; ++k) {
    const double s = arg + rho * k / (n * 1000.0);
    if (s > 0 && s <= rho) best = std::max(best, 4 * s / f(s));
  }
  return best;
}

TEST(SystemRanges, ExampleUppersWithAnalyticKOne) {
  const auto nl = example_system();
  const double beta[2] = {kRho, kRho};
  const auto r = system_ranges(nl, coarse_disk(), beta, 1, 1.0, 0.25, kMu1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0].upper, 1.669, 5e-3);
  EXPECT_NEAR(r[1].upper, 5.432, 5e-3);
  EXPECT_NEAR(r[0].upper, 4 * kRho / (std::sqrt(kRho) + std::tan(kRho)), 1e-12);
  EXPECT_NEAR(r[1].upper, 4 / kRho, 1e-12);
  EXPECT_EQ(r[0].lower, 0.0);
  EXPECT_TRUE(r[0].upper_inclusive);
  EXPECT_FALSE(r[1].lower_inclusive);
  EXPECT_TRUE(r[0].contains(1.6));
  EXPECT_TRUE(r[0].contains(r[0].upper));
  EXPECT_FALSE(r[0].contains(0.0));
  // Upper reproducible from provenance.
  EXPECT_DOUBLE_EQ(r[0].upper, r[0].provenance.beta / (r[0].provenance.m_value * r[0].provenance.k1_norm));
}

TEST(SystemRanges, LowerBoundFromDelta) {
  const auto nl = example_system();
  const double beta[2] = {kRho, kRho};
  const auto weak = system_ranges(nl, coarse_disk(), beta, 0, 1.0, 0.25, kMu1);
  EXPECT_NEAR(weak[0].lower, kMu1, 1e-12);
  EXPECT_TRUE(weak[0].empty);
  EXPECT_FALSE(weak[1].empty);
  const auto strong = system_ranges(nl, coarse_disk(), beta, 0, 10.0, 0.25, kMu1);
  EXPECT_NEAR(strong[0].lower, 0.5783, 1e-4);
  EXPECT_FALSE(strong[0].empty);
  EXPECT_FALSE(strong[0].contains(strong[0].lower));
  EXPECT_TRUE(strong[0].contains(1.6));
  EXPECT_EQ(*strong[0].provenance.delta, 10.0);
}

TEST(SystemRanges, LinearScalarIsEmpty) {
  const Nonlinearity nl(UnitDisk{}, {"s"}, {1.0});
  const double beta[1] = {1.0};
  const auto r = system_ranges(nl, coarse_disk(), beta, 0, 1.0, 0.25, kMu1);
  EXPECT_DOUBLE_EQ(r[0].upper, 4.0);
  EXPECT_TRUE(r[0].empty);
}

TEST(SystemRanges, ScalesWithBetaForHomogeneousF) {
  const Nonlinearity nl(UnitDisk{}, {"u1", "u1 + u2"}, {2.0, 2.0});
  const double b1[2] = {0.5, 0.5}, b2[2] = {1.0, 1.0};
  const auto r1 = system_ranges(nl, coarse_disk(), b1, 0, 1.0, 0.25, kMu1);
  const auto r2 = system_ranges(nl, coarse_disk(), b2, 0, 1.0, 0.25, kMu1);
  // beta / m(beta) is scale invariant for degree-one f, so the ratio of
  // m values is exactly the ratio of betas.
  EXPECT_DOUBLE_EQ(r2[0].provenance.m_value, 2 * r1[0].provenance.m_value);
  EXPECT_DOUBLE_EQ(r2[1].upper, r1[1].upper);
}

TEST(SystemRanges, NumericKOneCloseToAnalytic) {
  const auto nl = example_system();
  const double beta[2] = {kRho, kRho};
  auto g = build_grid(UnitDisk{}, 1.0 / 64);
  const double k1 = k_one_norm(assemble(g, EllipticCoefficients::laplacian(), BoundarySpec::dirichlet())).norm;
  const auto a = system_ranges(nl, *g, beta, 1, 1.0, 0.25, kMu1);
  const auto n = system_ranges(nl, *g, beta, 1, 1.0, k1, kMu1);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(std::abs(n[j].upper / a[j].upper - 1.0), 0.02);
}

TEST(SystemRanges, ConditionCViolations) {
  const Nonlinearity nl(UnitDisk{}, {"u1", "0*u2"}, {1.0, 1.0});
  const double beta[2] = {1.0, 1.0};
  try {
    system_ranges(nl, coarse_disk(), beta, 0, 1.0, 0.25, kMu1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConditionCViolation);
  }
  try {
    system_ranges(nl, coarse_disk(), beta, 1, 1.0, 0.25, kMu1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveM);
  }
  const double outside[2] = {2.0, 1.0};
  EXPECT_THROW(system_ranges(nl, coarse_disk(), outside, 0, 1.0, 0.25, kMu1), Error);
}

TEST(SystemRanges, SafetyFactorOnlyInflatesXDependentM) {
  const Nonlinearity nl(Rectangle{0, 1, 0, 1}, {"u1", "(1 + x1) * u2"}, {1.0, 1.0});
  auto g = build_grid(Rectangle{0, 1, 0, 1}, 0.125);
  const double beta[2] = {1.0, 1.0};
  const auto plain = system_ranges(nl, *g, beta, 0, 1.0, 0.25, kMu1, 1.0);
  const auto safe = system_ranges(nl, *g, beta, 0, 1.0, 0.25, kMu1, 1.01);
  EXPECT_EQ(plain[0].upper, safe[0].upper);
  EXPECT_NEAR(safe[1].provenance.m_value, 2.02, 1e-12);
}

TEST(SingleRange, TanExampleSupremum) {
  const double rho = pi / 2 - 1e-6;
  const Nonlinearity nl(UnitDisk{}, {"sqrt(s) + tan(s)"}, {rho});
  const auto r = single_range(nl, coarse_disk(), rho, 1.0, 0.5, 0.25, kMu1);
  const double oracle = brute_sup([](double s) { return std::sqrt(s) + std::tan(s); }, rho);
  EXPECT_NEAR(oracle, 1.66924, 1e-5);
  EXPECT_NEAR(r.range.upper, 1.66924, 1e-3);
  EXPECT_NEAR(r.range.upper, oracle, 1e-9);
  EXPECT_NEAR(r.argmax, 0.7336, 1e-3);
  EXPECT_TRUE(r.range.lower_inclusive);
  EXPECT_FALSE(r.range.upper_inclusive);
  EXPECT_EQ(r.curve.size(), 2000u);
}

TEST(SingleRange, RefinementInvariance) {
  const double rho = pi / 2 - 1e-6;
  const Nonlinearity nl(UnitDisk{}, {"sqrt(s) + tan(s)"}, {rho});
  const auto a = single_range(nl, coarse_disk(), rho, 1.0, 0.5, 0.25, kMu1, 2000);
  const auto b = single_range(nl, coarse_disk(), rho, 1.0, 0.5, 0.25, kMu1, 4000);
  EXPECT_LT(std::abs(a.range.upper - b.range.upper), 1e-6);
}

TEST(SingleRange, LinearAndConstant) {
  const Nonlinearity lin(UnitDisk{}, {"s"}, {1.0});
  const auto l = single_range(lin, coarse_disk(), 1.0, 1.0, 0.5, 0.25, kMu1);
  EXPECT_NEAR(l.range.upper, 4.0, 1e-12);
  EXPECT_TRUE(l.range.empty);
  for (const auto& [s, v] : l.curve) EXPECT_NEAR(v, 4.0, 1e-12);

  const Nonlinearity one(UnitDisk{}, {"1"}, {0.8});
  const auto c = single_range(one, coarse_disk(), 0.8, 1.0, 0.5, 0.25, kMu1);
  EXPECT_DOUBLE_EQ(c.range.upper, 4 * 0.8);
  EXPECT_DOUBLE_EQ(c.argmax, 0.8);
}

TEST(SingleRange, LowerBoundIsInclusive) {
  const Nonlinearity nl(UnitDisk{}, {"1"}, {4.0});
  const auto r = single_range(nl, coarse_disk(), 4.0, 1.0, 0.5, 0.25, kMu1);
  EXPECT_TRUE(r.range.contains(kMu1));
  EXPECT_FALSE(r.range.contains(r.range.upper));
}

TEST(SingleRange, Errors) {
  const Nonlinearity neg(UnitDisk{}, {"s - 1"}, {2.0});
  try {
    single_range(neg, coarse_disk(), 2.0, 1.0, 0.5, 0.25, kMu1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveM);
  }
  const Nonlinearity lin(UnitDisk{}, {"s"}, {1.0});
  EXPECT_THROW(single_range(lin, coarse_disk(), 1.0, 1.0, 0.5, 0.25, kMu1, 50), Error);
  EXPECT_THROW(single_range(lin, coarse_disk(), 2.0, 1.0, 0.5, 0.25, kMu1), Error);
  EXPECT_THROW(single_range(example_system(), coarse_disk(), kRho, 1.0, 0.5, 0.25, kMu1), Error);
}

TEST(GrowthParameters, AutoSweepPicksLargestDelta) {
  // tan-example: f(s)/s -> infinity at 0, so the largest delta in the sweep
  // is admissible on a small enough box.
  const Nonlinearity tan(UnitDisk{}, {"sqrt(s) + tan(s)"}, {1.0});
  const auto g = select_growth_parameters(tan, 0, 2000, 1);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->delta, 1e4);
  EXPECT_TRUE(check_growth(tan, 0, g->delta, g->rho0, 2000, 1).passed);
  EXPECT_FALSE(check_growth(tan, 0, g->delta, 2 * g->rho0, 2000, 1).passed);

  const Nonlinearity lin(UnitDisk{}, {"2*s"}, {1.0});
  const auto l = select_growth_parameters(lin, 0, 2000, 1);
  ASSERT_TRUE(l.has_value());
  EXPECT_EQ(l->delta, 1.0);

  const Nonlinearity square(UnitDisk{}, {"s^2"}, {1.0});
  EXPECT_FALSE(select_growth_parameters(square, 0, 500, 1).has_value());
}

}  // namespace
