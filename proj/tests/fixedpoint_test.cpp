#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "conesolve/fixedpoint.hpp"

namespace {

using namespace conesolve;

const double kRho = 15.0 * std::numbers::pi / 64.0;

DiscreteOperator disk_laplacian(double h) {
  return assemble(build_grid(UnitDisk{}, h), EllipticCoefficients::laplacian(), BoundarySpec::dirichlet());
}

ProblemInstance example_system(double h, double l1, double l2) {
  return ProblemInstance(disk_laplacian(h),
                         Nonlinearity(UnitDisk{}, {"sqrt(max(u1,u2)) + tan(max(u1,u2))", "max(u1,u2)^2"},
                                      {kRho, kRho}),
                         {l1, l2});
}

ProblemInstance scalar(const DiscreteOperator& op, const std::string& f, double rho, double lambda) {
  return ProblemInstance(op, Nonlinearity(UnitDisk{}, {f}, {rho}), {lambda});
}

VectorGridFunction constant(const DiscreteOperator& op, std::vector<double> v) {
  return VectorGridFunction::constant(op.grid(), v);
}

TEST(ApplyT, ConstantNonlinearityGivesKOne) {
  const auto op = disk_laplacian(0.125);
  const auto p = scalar(op, "1", 2.0, 1.0);
  const auto e = k_one_norm(op).e;
  for (double level : {0.0, 0.7, 2.0}) {
    const auto t = apply_T(p, constant(op, {level}));
    EXPECT_TRUE((t.components[0].values.array() == e.values.array()).all());
  }
}

TEST(ApplyT, ZeroIsFixed) {
  const auto p = example_system(0.125, 1.6, 5.0);
  EXPECT_EQ(apply_T(p, VectorGridFunction::zeros(p.op.grid(), 2)).norm(), 0.0);
}

TEST(ApplyT, ExampleSystemAtBoxCornerIsScaledKOne) {
  const auto p = example_system(0.125, 1.6, 5.0);
  const auto e = k_one_norm(p.op).e;
  const auto t = apply_T(p, constant(p.op, {kRho, kRho}));
  const double m1 = std::sqrt(kRho) + std::tan(kRho), m2 = kRho * kRho;
  EXPECT_LT((t.components[0].values - 1.6 * m1 * e.values).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_LT((t.components[1].values - 5.0 * m2 * e.values).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(ApplyT, LinearInLambda) {
  const auto a = example_system(0.125, 1.0, 2.0);
  const auto b = example_system(0.125, 2.0, 4.0);
  const auto u = constant(a.op, {0.3, 0.5});
  const auto ta = apply_T(a, u), tb = apply_T(b, VectorGridFunction::constant(b.op.grid(), std::vector{0.3, 0.5}));
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LT((tb.components[i].values - 2.0 * ta.components[i].values).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(ApplyT, MonotoneOnOrderedPairs) {
  const auto p = example_system(0.125, 1.6, 5.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = VectorGridFunction::zeros(p.op.grid(), 2);
    auto v = u;
    for (std::size_t i = 0; i < 2; ++i)
      for (Eigen::Index k = 0; k < u.components[i].values.size(); ++k) {
        u.components[i].values[k] = unit(rng) * kRho;
        v.components[i].values[k] = u.components[i].values[k] + unit(rng) * (kRho - u.components[i].values[k]);
      }
    EXPECT_GE(min_gap(apply_T(p, u), apply_T(p, v)), -1e-10);
  }
}

TEST(ProblemInstance, RejectsBadLambdas) {
  EXPECT_THROW(example_system(0.25, 1.0, 0.0), Error);
  EXPECT_THROW(ProblemInstance(disk_laplacian(0.25), Nonlinearity(UnitDisk{}, {"s"}, {1.0}), {1.0, 2.0}), Error);
}

TEST(Supersolution, ConstantForcing) {
  const auto op = disk_laplacian(1.0 / 32);
  const auto c = check_supersolution(scalar(op, "1", 1.0, 1.0), constant(op, {1.0}));
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.margin, 0.75, 1e-3);
}

TEST(Supersolution, ExampleSystemInsideAndOutsideRange) {
  const auto inside = example_system(1.0 / 32, 1.6, 5.0);
  EXPECT_TRUE(check_supersolution(inside, constant(inside.op, {kRho, kRho})).holds);
  const auto outside = example_system(1.0 / 32, 16.0, 50.0);
  const auto c = check_supersolution(outside, constant(outside.op, {kRho, kRho}));
  EXPECT_FALSE(c.holds);
  EXPECT_LT(c.margin, 0.0);
}

TEST(Subsolution, LinearProblemAboveAndBelowPrincipalValue) {
  const auto op = disk_laplacian(1.0 / 32);
  const auto spectrum = spectral_radius(op);
  const auto above = construct_subsolution(scalar(op, "s", 1.0, 1.1 * spectrum.mu1), spectrum, 0, 1.0, 0.5);
  ASSERT_TRUE(above.has_value());
  EXPECT_EQ(above->epsilon, 0.5);
  EXPECT_FALSE(construct_subsolution(scalar(op, "s", 1.0, 0.9 * spectrum.mu1), spectrum, 0, 1.0, 0.5).has_value());
}

TEST(Subsolution, SuperlinearNonlinearityNeedsSmallEpsilon) {
  // f = s + 30 s^2 - 200 s^3 has slope 1 at 0 but drops below s once
  // s > 0.2, so only small multiples of phi are subsolutions.
  const auto op = disk_laplacian(1.0 / 32);
  const auto spectrum = spectral_radius(op);
  const auto p = scalar(op, "max(s + 30*s^2 - 200*s^3, 0)", 0.9, 1.2 * spectrum.mu1);
  const auto sub = construct_subsolution(p, spectrum, 0, 1.0, 0.8);
  ASSERT_TRUE(sub.has_value());
  EXPECT_LT(sub->epsilon, 0.8);
  EXPECT_GE(min_gap(sub->alpha, apply_T(p, sub->alpha)), -kOrderSlack);
}

TEST(Subsolution, OtherComponentsStayZero) {
  const auto p = example_system(1.0 / 16, 1.6, 5.0);
  const auto spectrum = spectral_radius(p.op);
  const auto sub = construct_subsolution(p, spectrum, 0, 100.0, 0.01);
  ASSERT_TRUE(sub.has_value());
  EXPECT_EQ(sub->alpha.components[1].sup_norm(), 0.0);
  EXPECT_NEAR(sub->alpha.components[0].sup_norm(), sub->epsilon, 1e-15);
}

TEST(MonotoneIterate, ConstantForcingConvergesImmediately) {
  const auto op = disk_laplacian(1.0 / 32);
  const auto p = scalar(op, "1", 1.0, 1.0);
  const auto r = monotone_iterate(p, constant(op, {1.0}), Direction::FromAbove);
  EXPECT_LE(r.iterations, 2);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_TRUE((r.solution.components[0].values.array() == k_one_norm(op).e.values.array()).all());
}

TEST(MonotoneIterate, ZeroFromBelowStaysZero) {
  const auto p = example_system(1.0 / 16, 1.6, 5.0);
  const auto r = monotone_iterate(p, VectorGridFunction::zeros(p.op.grid(), 2), Direction::FromBelow);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged_to_zero);
}

TEST(MonotoneIterate, ExampleSystemFromAbove) {
  const auto p = example_system(1.0 / 32, 1.6, 5.0);
  const auto r = monotone_iterate(p, constant(p.op, {kRho, kRho}), Direction::FromAbove, 1e-9);
  EXPECT_LE(r.residual, 1e-9);
  EXPECT_FALSE(r.converged_to_zero);
  EXPECT_LE(r.worst_monotonicity_defect, kOrderSlack);
  for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1] + 1e-12);
  EXPECT_LE(r.solution.norm(), kRho);
  EXPECT_GT(r.solution.min_value(), -1e-10);

  const auto cert = certify(p, r.solution, 1e-9);
  EXPECT_TRUE(cert.certified()) << to_string(cert.status);
}

TEST(MonotoneIterate, ErrorsOnBadStartsAndNonMonotoneF) {
  const auto op = disk_laplacian(1.0 / 16);
  try {
    monotone_iterate(scalar(op, "1", 1.0, 100.0), constant(op, {1.0}), Direction::FromAbove);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotASupersolution);
  }
  try {
    monotone_iterate(scalar(op, "s", 1.0, 1.0), constant(op, {1.0}), Direction::FromBelow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotASubsolution);
  }
  // A decreasing f overshoots: T(beta) <= beta, but T(T beta) >= T beta.
  try {
    monotone_iterate(scalar(op, "1 - s", 1.0, 1.0), constant(op, {1.0}), Direction::FromAbove);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MonotonicityViolation);
  }
  try {
    const auto spectrum = spectral_radius(op);
    VectorGridFunction phi{{spectrum.eigenfunction}};
    monotone_iterate(scalar(op, "s", 1.0, spectrum.mu1 * 0.999), phi, Direction::FromAbove, 1e-9, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

TEST(BracketIterate, LowerStaysBelowUpper) {
  const auto op = disk_laplacian(1.0 / 32);
  const auto spectrum = spectral_radius(op);
  // Saturating f: growth 2s near zero, bounded by 0.3, so beta = 1 is a
  // supersolution and small multiples of phi are subsolutions.
  const auto q = scalar(op, "min(2*s, 0.3)", 1.0, 1.2 * spectrum.mu1 / 2.0);
  const auto sub = construct_subsolution(q, spectrum, 0, 2.0, 0.1);
  ASSERT_TRUE(sub.has_value());
  const auto beta = constant(op, {1.0});
  ASSERT_TRUE(check_supersolution(q, beta).holds);
  const auto b = bracket_iterate(q, sub->alpha, beta);
  EXPECT_TRUE(b.ordered());
  EXPECT_GE(min_gap(b.lower.solution, b.upper.solution), -1e-9);
  EXPECT_GT(b.lower.solution.norm(), 0.0);
  EXPECT_TRUE(certify(q, b.lower.solution, 1e-9).certified());
}

TEST(Certify, Outcomes) {
  const auto op = disk_laplacian(1.0 / 32);
  const auto p = scalar(op, "1", 1.0, 1.0);
  const auto e = k_one_norm(op).e;
  VectorGridFunction u{{e}};
  EXPECT_EQ(certify(p, u, 1e-9).status, CertificateStatus::NonzeroPositive);

  const auto sys = example_system(1.0 / 32, 1.6, 5.0);
  const auto zero = certify(sys, VectorGridFunction::zeros(sys.op.grid(), 2), 1e-9);
  EXPECT_EQ(zero.status, CertificateStatus::Trivial);
  EXPECT_EQ(zero.residual, 0.0);

  VectorGridFunction shifted = u;
  shifted.components[0].values.array() += 0.1;
  const auto c = certify(p, shifted, 1e-9);
  EXPECT_EQ(c.status, CertificateStatus::NotFixedPoint);
  EXPECT_NEAR(c.residual, 0.1, 1e-12);

  VectorGridFunction big = u;
  big.components[0].values.array() += 2.0;
  EXPECT_EQ(certify(p, big, 1e-9).status, CertificateStatus::OutOfBox);
}

}  // namespace
