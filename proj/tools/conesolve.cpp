// conesolve: positive solutions of discretized elliptic systems by monotone iteration.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "conesolve/acceptance.hpp"
#include "conesolve/config.hpp"
#include "conesolve/log.hpp"
#include "conesolve/pipeline.hpp"

namespace {

using namespace conesolve;

struct IoFailure {
  std::string message;
};

struct NoInput {
  std::string message;
};

void apply_thread_cap() {
  const char* env = std::getenv("CONESOLVE_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    warn(std::string("ignoring CONESOLVE_THREADS=") + env + " (expected a positive integer)");
    return;
  }
  Eigen::setNbThreads(static_cast<int>(n));
}

Config load(const std::string& path, const RunOptions& opt) {
  Config cfg;
  try {
    cfg = load_config(path);
  } catch (const std::filesystem::filesystem_error& e) {
    throw NoInput{path + ": " + e.code().message()};
  }
  return apply_overrides(std::move(cfg), opt);
}

template <class Write>
void write_artifacts(Write&& write) {
  try {
    write();
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoFailure{e.what()};
  } catch (const std::ios_base::failure& e) {
    throw IoFailure{e.what()};
  }
}

int cmd_solve(const std::string& path, const RunOptions& opt) {
  const auto outcome = run_solve(load(path, opt));
  std::cout << outcome.report;
  write_artifacts([&] { write_solve_artifacts(outcome, opt); });
  if (!outcome.failed_condition.empty()) std::cerr << "conesolve: failed condition " << outcome.failed_condition << "\n";
  return outcome.exit;
}

int cmd_lambda_range(const std::string& path, const RunOptions& opt) {
  const auto outcome = run_lambda_range(load(path, opt));
  std::cout << outcome.report;
  write_artifacts([&] { write_lambda_range_artifacts(outcome, opt); });
  if (!outcome.failed_condition.empty()) std::cerr << "conesolve: failed condition " << outcome.failed_condition << "\n";
  return outcome.exit;
}

int cmd_spectrum(const std::string& path, const RunOptions& opt) {
  const auto outcome = run_spectrum(load(path, opt));
  std::cout << outcome.report;
  write_artifacts([&] { write_spectrum_artifacts(outcome, opt); });
  return exit_code::kSuccess;
}

int cmd_verify(std::optional<double> h, std::optional<std::uint64_t> seed, bool list) {
  acceptance::Options o;
  if (h) {
    if (!(*h > 0.0)) throw Error(ErrorCode::ConfigError, "--h must be positive");
    o.h = *h;
  }
  if (seed) o.seed = *seed;
  if (list) {
    for (const auto& c : acceptance::criteria())
      std::cout << c.id << "  " << c.title << (c.h_pinned ? "  [h = 1/64]" : "") << "\n";
    return exit_code::kSuccess;
  }
  int failed = 0, skipped = 0;
  for (const auto& c : acceptance::criteria()) {
    const auto r = acceptance::run(c, o);
    std::cout << r.line() << "\n" << std::flush;
    failed += r.status == acceptance::Status::Fail;
    skipped += r.status == acceptance::Status::SkipCoarse;
  }
  const auto total = acceptance::criteria().size();
  std::cout << (total - static_cast<std::size_t>(failed + skipped)) << "/" << total << " passed";
  if (skipped) std::cout << ", " << skipped << " skipped on the coarse grid";
  if (failed) std::cout << ", " << failed << " failed";
  std::cout << "\n";
  return failed == 0 ? exit_code::kSuccess : exit_code::kHypothesis;
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink([](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; });
  apply_thread_cap();

  CLI::App app{"Positive solutions of discretized elliptic systems by monotone iteration"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");  // -h would collide with --h

  std::string config_path;
  RunOptions opt;
  std::string out_dir = ".";
  bool list = false;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file")->required();
    cmd->add_option("--h", opt.h, "grid spacing");
    cmd->add_option("--tol", opt.tol, "iteration tolerance");
    cmd->add_option("--max-iter", opt.max_iter, "iteration cap");
    cmd->add_option("--seed", opt.seed, "seed for sampled checks");
    cmd->add_option("--out", out_dir, "artifact directory");
    cmd->add_flag("--csv", opt.csv, "also write CSV artifacts");
  };

  auto* solve = app.add_subcommand("solve", "certify a nonzero positive solution");
  add_common(solve);
  auto* range = app.add_subcommand("lambda-range", "admissible lambda intervals");
  add_common(range);
  auto* spectrum = app.add_subcommand("spectrum", "spectral radius of K and principal value");
  add_common(spectrum);
  auto* verify = app.add_subcommand("verify", "run the built-in acceptance suite");
  verify->add_option("--h", opt.h, "grid spacing for the h-dependent criteria");
  verify->add_option("--seed", opt.seed, "seed for randomized criteria");
  verify->add_flag("--list", list, "list criteria without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_code::kSuccess : exit_code::kUsage;
  }
  opt.out_dir = out_dir;

  try {
    if (*solve) return cmd_solve(config_path, opt);
    if (*range) return cmd_lambda_range(config_path, opt);
    if (*spectrum) return cmd_spectrum(config_path, opt);
    return cmd_verify(opt.h, opt.seed, list);
  } catch (const NoInput& e) {
    std::cerr << "conesolve: " << e.message << "\n";
    return exit_code::kNoInput;
  } catch (const IoFailure& e) {
    std::cerr << "conesolve: " << e.message << "\n";
    return exit_code::kIo;
  } catch (const Error& e) {
    std::cerr << "conesolve: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "conesolve: internal error: " << e.what() << "\n";
    return exit_code::kSoftware;
  }
}
