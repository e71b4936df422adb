#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "conesolve/builtin_configs.hpp"
#include "conesolve/config.hpp"
#include "conesolve/pipeline.hpp"

namespace {

using namespace conesolve;

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path source_dir() {
  const char* dir = std::getenv("CONESOLVE_SOURCE_DIR");
  return dir ? std::filesystem::path(dir) : std::filesystem::current_path();
}

TEST(Config, SystemDiskBuiltin) {
  const auto cfg = parse_config(builtin::kSystemDisk, "system_disk.cfg");
  EXPECT_TRUE(is_disk(cfg.domain));
  EXPECT_DOUBLE_EQ(cfg.h, 1.0 / 64.0);
  EXPECT_EQ(cfg.bc, BoundarySpec::Kind::Dirichlet);
  ASSERT_EQ(cfg.n, 2u);
  EXPECT_EQ(cfg.f[0], "sqrt(max(u1,u2)) + tan(max(u1,u2))");
  EXPECT_EQ(cfg.f[1], "max(u1,u2)^2");
  ASSERT_EQ(cfg.rho.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.rho[0], 15.0 * std::numbers::pi / 64.0);
  EXPECT_DOUBLE_EQ(cfg.rho[1], cfg.rho[0]);
  ASSERT_EQ(cfg.lambdas.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.lambdas[0], 1.6);
  EXPECT_DOUBLE_EQ(cfg.lambdas[1], 5.0);
  EXPECT_EQ(cfg.i0, 0u);
  EXPECT_FALSE(cfg.delta);
  EXPECT_EQ(cfg.seed, 20240611u);
}

TEST(Config, ScalarDiskBuiltin) {
  const auto cfg = parse_config(builtin::kScalarDisk);
  ASSERT_EQ(cfg.n, 1u);
  EXPECT_EQ(cfg.f[0], "sqrt(s) + tan(s)");
  ASSERT_EQ(cfg.lambdas.size(), 1u);
  EXPECT_DOUBLE_EQ(cfg.lambdas[0], 1.6);
}

TEST(Config, ShippedFilesMatchBuiltins) {
  const auto dir = source_dir() / "configs";
  EXPECT_EQ(read_file(dir / "system_disk.cfg"), builtin::kSystemDisk);
  EXPECT_EQ(read_file(dir / "scalar_disk.cfg"), builtin::kScalarDisk);
}

TEST(Config, LoadConfigReadsFileAndUsesPathAsOrigin) {
  const auto path = source_dir() / "configs" / "scalar_disk.cfg";
  const auto cfg = load_config(path);
  EXPECT_EQ(cfg.origin, path.string());
  EXPECT_EQ(cfg.n, 1u);
  EXPECT_THROW(load_config(source_dir() / "configs" / "no_such.cfg"), std::filesystem::filesystem_error);
}

TEST(Config, RectangleWithRobinAndCoefficients) {
  const auto cfg = parse_config(R"(
domain = rectangle
x_min = 0
x_max = 2
y_min = -1
y_max = 1
bc = robin
robin_b = "1 + x1"
a11 = "2"
a12 = "0.1*x1"
c = "1"
n = 1
f1 = "s^2 + x1"
rho = 0.5
delta = 10
rho0 = 0.01
)");
  ASSERT_FALSE(is_disk(cfg.domain));
  const auto& r = std::get<Rectangle>(cfg.domain);
  EXPECT_EQ(r.x_min, 0.0);
  EXPECT_EQ(r.x_max, 2.0);
  EXPECT_EQ(r.y_min, -1.0);
  EXPECT_EQ(r.y_max, 1.0);
  EXPECT_EQ(cfg.bc, BoundarySpec::Kind::Robin);
  EXPECT_TRUE(cfg.lambdas.empty());
  EXPECT_DOUBLE_EQ(*cfg.delta, 10.0);
  EXPECT_DOUBLE_EQ(*cfg.rho0, 0.01);

  const auto k = coefficients_from(cfg);
  EXPECT_DOUBLE_EQ(k.a11(0.3, 0.4), 2.0);
  EXPECT_DOUBLE_EQ(k.a12(0.5, 0.0), 0.05);
  EXPECT_DOUBLE_EQ(k.a22(0.5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(k.c(0.5, 0.0), 1.0);
  const auto bc = boundary_from(cfg);
  EXPECT_EQ(bc.kind, BoundarySpec::Kind::Robin);
}

TEST(Config, CommentsAndQuotedHash) {
  const auto cfg = parse_config("n = 1  # one equation\nf1 = \"s\"  # trailing\nrho = 1\n");
  EXPECT_EQ(cfg.f[0], "s");
  // A quoted '#' reaches the expression parser instead of being stripped.
  EXPECT_NE(error_of("n = 1\nf1 = \"s # x\"\nrho = 1\n").find("unexpected '#'"), std::string::npos);
}

TEST(Config, ConstantExpressionsAsNumbers) {
  const auto cfg = parse_config("n = 1\nf1 = \"s\"\nrho = pi/4\nh = 1/32\nlambda = 2^3\n");
  EXPECT_DOUBLE_EQ(cfg.rho[0], std::numbers::pi / 4);
  EXPECT_DOUBLE_EQ(cfg.h, 1.0 / 32);
  EXPECT_DOUBLE_EQ(cfg.lambdas[0], 8.0);
}

TEST(Config, ErrorsCarryOriginAndLine) {
  EXPECT_EQ(error_of("n = 1\nf1 = \"s\"\nrho = 1\nrho = 2\n"), "ConfigError: t.cfg:4: duplicate key `rho`");
  EXPECT_EQ(error_of("n = 1\nthis line is wrong\n"), "ConfigError: t.cfg:2: expected `key = value`");
  EXPECT_EQ(error_of("n = 1\nf1 = \"s\"\nrho = 1\ncolour = red\n"), "ConfigError: t.cfg:4: unknown key `colour`");
  EXPECT_EQ(error_of("n = 1\nf1 = \"s\nrho = 1\n"), "ConfigError: t.cfg:2: unterminated or malformed quoted value for `f1`");
}

TEST(Config, CrossFieldValidation) {
  EXPECT_NE(error_of("f1 = \"s\"\nrho = 1\n").find("missing required key `n`"), std::string::npos);
  EXPECT_NE(error_of("n = 2\nf1 = \"u1\"\nrho = 1\n").find("missing `f2`"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nf2 = \"s\"\nrho = 1\n").find("more equations"), std::string::npos);
  EXPECT_NE(error_of("n = 2\nf1 = \"u1\"\nf2 = \"u2\"\nrho1 = 1\n").find("`rho` needs exactly 2"), std::string::npos);
  EXPECT_NE(error_of("n = 2\nf1 = \"u1\"\nf2 = \"u2\"\nrho = 1\nlambda1 = 1\n").find("`lambda` needs exactly 2"),
            std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nrho1 = 1\n").find("both"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\ni0 = 2\n").find("i0 must be between"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\ndelta = 2\n").find("together"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\ndelta = 2\nrho0 = 1\n").find("rho0 must lie"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = -1\n").find("rho must be positive"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nh = 0\n").find("h must be positive"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nbc = periodic\n").find("bc must be"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nrobin_b = \"1\"\n").find("only meaningful"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\ndomain = rectangle\nx_min = 0\n").find("rectangle needs"),
            std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nm_safety = 0.5\n").find("m_safety"), std::string::npos);
  EXPECT_NE(error_of("n = 1\nf1 = \"s\"\nrho = 1\nmax_iter = 2.5\n").find("integer"), std::string::npos);
}

TEST(Config, ExpressionSyntaxCheckedAtLoad) {
  const auto msg = error_of("n = 1\nf1 = \"s +* 2\"\nrho = 1\n");
  EXPECT_EQ(msg.rfind("ConfigError: t.cfg:2: f1", 0), 0u) << msg;
  // u2 is not a variable of a single equation.
  EXPECT_EQ(error_of("n = 1\nf1 = \"u2\"\nrho = 1\n").rfind("ConfigError: t.cfg:2:", 0), 0u);
}

TEST(Config, OverridesReplaceFieldsAndValidate) {
  RunOptions opt;
  opt.h = 0.125;
  opt.tol = 1e-6;
  opt.max_iter = 7;
  opt.seed = 3;
  const auto cfg = apply_overrides(parse_config(builtin::kScalarDisk), opt);
  EXPECT_EQ(cfg.h, 0.125);
  EXPECT_EQ(cfg.tol, 1e-6);
  EXPECT_EQ(cfg.max_iter, 7);
  EXPECT_EQ(cfg.seed, 3u);

  RunOptions bad;
  bad.h = -1.0;
  EXPECT_THROW(apply_overrides(parse_config(builtin::kScalarDisk), bad), Error);
}

TEST(Config, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigError), exit_code::kConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::SyntaxError), exit_code::kConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::NoConvergence), exit_code::kHypothesis);
  EXPECT_EQ(exit_code_for(ErrorCode::SolverFailure), exit_code::kSoftware);
  EXPECT_GE(exit_code_for(ErrorCode::InvalidArgument), 64);
}

}  // namespace
