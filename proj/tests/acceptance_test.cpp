#include <gtest/gtest.h>

#include <cstdio>
#include <string>

#include "conesolve/acceptance.hpp"

namespace {

using namespace conesolve::acceptance;

void check(const std::string& id) {
  for (const auto& c : criteria()) {
    if (c.id != id) continue;
    const Result r = run(c, Options{});
    std::printf("%s  (%.1fs)\n", r.line().c_str(), r.seconds);
    std::fflush(stdout);
    EXPECT_EQ(r.status, Status::Pass) << r.detail;
    return;
  }
  FAIL() << "unknown criterion " << id;
}

TEST(Acceptance, Criterion1a_TorsionError) { check("1a"); }
TEST(Acceptance, Criterion1b_TorsionErrorRatio) { check("1b"); }
TEST(Acceptance, Criterion2_KOneNorm) { check("2"); }
TEST(Acceptance, Criterion3_PrincipalValue) { check("3"); }
TEST(Acceptance, Criterion4_SystemUppers) { check("4"); }
TEST(Acceptance, Criterion5_ScalarSup) { check("5"); }
TEST(Acceptance, Criterion6_EndToEnd) { check("6"); }
TEST(Acceptance, Criterion7_Bracketing) { check("7"); }
TEST(Acceptance, Criterion8_OperatorProperties) { check("8"); }
TEST(Acceptance, Criterion9_HypothesisCheckers) { check("9"); }
TEST(Acceptance, Criterion10_ExpressionEngine) { check("10"); }

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
