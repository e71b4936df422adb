#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "conesolve/config.hpp"
#include "conesolve/discrete_operator.hpp"
#include "conesolve/error.hpp"
#include "conesolve/fixedpoint.hpp"
#include "conesolve/greens.hpp"
#include "conesolve/log.hpp"
#include "conesolve/nonlinearity.hpp"
#include "conesolve/ranges.hpp"

namespace conesolve {

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kHypothesis = 1;
inline constexpr int kTrivial = 2;
inline constexpr int kEmptyRange = 3;
inline constexpr int kUsage = 64;
inline constexpr int kConfig = 65;
inline constexpr int kNoInput = 66;
inline constexpr int kSoftware = 70;
inline constexpr int kIo = 74;
}  // namespace exit_code

/// Exit code for a library error escaping a command.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoConvergence:
    case ErrorCode::MonotonicityViolation:
    case ErrorCode::NotASupersolution:
    case ErrorCode::NotASubsolution:
    case ErrorCode::ConditionCViolation:
    case ErrorCode::NonpositiveM:
    case ErrorCode::BoxViolation:
    case ErrorCode::EvalDomainError:
      return exit_code::kHypothesis;
    case ErrorCode::SolverFailure:
    case ErrorCode::GridMismatch:
    case ErrorCode::DegenerateE:
    case ErrorCode::NotPositive:
    case ErrorCode::MissingBinding:
      return exit_code::kSoftware;
    default:
      return exit_code::kConfig;
  }
}

/// Command-line overrides applied on top of a config.
struct RunOptions {
  std::optional<double> h;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  bool csv = false;
};

inline Config apply_overrides(Config cfg, const RunOptions& opt) {
  if (opt.h) {
    if (!(*opt.h > 0.0)) throw Error(ErrorCode::ConfigError, "--h must be positive");
    cfg.h = *opt.h;
  }
  if (opt.tol) {
    if (!(*opt.tol > 0.0)) throw Error(ErrorCode::ConfigError, "--tol must be positive");
    cfg.tol = *opt.tol;
  }
  if (opt.max_iter) {
    if (*opt.max_iter < 1) throw Error(ErrorCode::ConfigError, "--max-iter must be positive");
    cfg.max_iter = *opt.max_iter;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

namespace detail {

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string csv_number(double v) { return fmt(v, 17); }

inline std::string describe_h(double h) {
  const double inv = 1.0 / h;
  if (std::abs(inv - std::round(inv)) < 1e-9 && inv >= 1.0) return "1/" + std::to_string(std::lround(inv));
  return fmt(h);
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  ~CsvFile() = default;
  void close() {
    out_.close();
    if (!out_) throw std::filesystem::filesystem_error("write failed", path_, std::make_error_code(std::errc::io_error));
  }
  std::ofstream& stream() { return out_; }

 private:
  static std::string cell(double v) { return csv_number(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.close();
  if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

inline std::string range_text(const LambdaRange& r) {
  std::string s = "lambda" + std::to_string(r.component + 1) + " in ";
  s += r.lower_inclusive ? "[" : "(";
  s += fmt(r.lower, 8) + ", " + fmt(r.upper, 8);
  s += r.upper_inclusive ? "]" : ")";
  if (r.empty) s += "  EMPTY";
  s += "   (beta = " + fmt(r.provenance.beta) + ", m = " + fmt(r.provenance.m_value) +
       ", ||K(1)|| = " + fmt(r.provenance.k1_norm);
  if (r.provenance.mu1) s += ", mu1 = " + fmt(*r.provenance.mu1);
  if (r.provenance.delta) s += ", delta = " + fmt(*r.provenance.delta);
  return s + ")";
}

inline void write_ranges_csv(const std::filesystem::path& path, const std::vector<LambdaRange>& ranges) {
  CsvFile csv(path, "component,lower,lower_inclusive,upper,upper_inclusive,empty,beta,m,k1_norm,mu1,delta");
  for (const auto& r : ranges)
    csv.row(r.component + 1, r.lower, r.lower_inclusive, r.upper, r.upper_inclusive, r.empty, r.provenance.beta,
            r.provenance.m_value, r.provenance.k1_norm, r.provenance.mu1 ? csv_number(*r.provenance.mu1) : "",
            r.provenance.delta ? csv_number(*r.provenance.delta) : "");
  csv.close();
}

}  // namespace detail

/// Grid, operator and nonlinearity built from a config.
struct Setup {
  Config config;
  std::shared_ptr<const Grid> grid;
  std::optional<DiscreteOperator> op;
  std::optional<Nonlinearity> nl;
};

inline Setup build_setup(const Config& cfg) {
  Setup s;
  s.config = cfg;
  s.grid = build_grid(cfg.domain, cfg.h);
  s.op.emplace(assemble(s.grid, coefficients_from(cfg), boundary_from(cfg)));
  s.nl.emplace(cfg.domain, cfg.f, cfg.rho);
  return s;
}

inline void describe_setup(const Setup& s, std::ostream& out) {
  const auto& d = s.op->diagnostics();
  out << "domain: " << describe(s.config.domain) << ", h = " << detail::describe_h(s.config.h) << ", "
      << s.grid->interior_count() << " interior nodes, bc = " << to_string(s.config.bc) << "\n";
  out << "operator: " << (d.is_m_matrix ? "M-matrix" : "NOT an M-matrix")
      << (d.weakly_diagonally_dominant ? ", weakly diagonally dominant" : "")
      << ", ellipticity mu0 = " << detail::fmt(d.ellipticity_mu0) << ", solver "
      << (s.op->solver().is_direct() ? "sparse LU" : "BiCGSTAB/ILUT") << "\n";
  if (!d.is_m_matrix) warn("operator is not an M-matrix; positivity of K and monotone iteration are not guaranteed");
}

/// Outcome of the structural hypothesis checks shared by solve and
/// lambda-range.
struct HypothesisOutcome {
  std::vector<CheckReport> checks;
  std::optional<GrowthParameters> growth;
  bool growth_auto = false;
  std::string failed_condition;  // empty when all passed

  bool passed() const { return failed_condition.empty(); }
};

inline HypothesisOutcome check_hypotheses(const Setup& s, std::ostream& out) {
  HypothesisOutcome h;
  const auto& nl = *s.nl;
  const auto& cfg = s.config;
  for (std::size_t i = 0; i < nl.n(); ++i) {
    for (auto report : {check_nonnegative(nl, i, cfg.samples, cfg.seed + i),
                        check_monotone(nl, i, cfg.samples, cfg.seed + 1000 + i)}) {
      out << report.text() << "\n";
      if (!report.passed && h.failed_condition.empty()) h.failed_condition = "(a)";
      h.checks.push_back(std::move(report));
    }
  }
  if (!h.passed()) return h;

  if (cfg.delta) {
    auto report = check_growth(nl, cfg.i0, *cfg.delta, *cfg.rho0, cfg.samples, cfg.seed + 2000);
    out << report.text() << "\n";
    if (report.passed) h.growth = GrowthParameters{*cfg.delta, *cfg.rho0};
    else h.failed_condition = "(b)";
    h.checks.push_back(std::move(report));
  } else {
    h.growth_auto = true;
    h.growth = select_growth_parameters(nl, cfg.i0, cfg.samples, cfg.seed + 2000);
    CheckReport report;
    if (h.growth) {
      report = check_growth(nl, cfg.i0, h.growth->delta, h.growth->rho0, cfg.samples, cfg.seed + 2000);
      out << report.text() << "  [auto: largest delta in the sweep]\n";
    } else {
      report.condition = "(b) f" + std::to_string(cfg.i0 + 1) + " >= delta u" + std::to_string(cfg.i0 + 1) +
                         " near 0 for some delta in {1e-2, ..., 1e4}";
      out << report.condition << ": FAIL, no delta in the sweep passed\n";
      h.failed_condition = "(b)";
    }
    h.checks.push_back(std::move(report));
  }
  return h;
}

/// lambda intervals: the system bounds for n > 1, the single-equation sup
/// bound for n = 1.
struct RangeOutcome {
  std::vector<LambdaRange> ranges;
  std::vector<std::pair<double, double>> curve;  // n = 1 only
  double k1_norm = 0.0;
  bool k1_from_config = false;
  SpectralEstimate spectrum;
};

inline RangeOutcome compute_ranges(const Setup& s, const GrowthParameters& growth, std::ostream& out) {
  const auto& cfg = s.config;
  RangeOutcome r;
  r.spectrum = spectral_radius(*s.op, cfg.spectral_tol, std::max(cfg.max_iter, 1000));
  const double computed_k1 = k_one_norm(*s.op).norm;
  r.k1_from_config = cfg.k1_norm.has_value();
  r.k1_norm = cfg.k1_norm.value_or(computed_k1);
  out << "spectrum: r(K) = " << detail::fmt(r.spectrum.r, 10) << ", mu1 = " << detail::fmt(r.spectrum.mu1, 10)
      << " (" << r.spectrum.iterations << " power iterations)\n";
  out << "||K(1)|| = " << detail::fmt(computed_k1, 10)
      << (r.k1_from_config ? " (computed; config override " + detail::fmt(r.k1_norm, 10) + " used)" : "") << "\n";

  if (s.nl->n() == 1) {
    auto single = single_range(*s.nl, *s.grid, cfg.rho[0], growth.delta, growth.rho0, r.k1_norm, r.spectrum.mu1,
                               2000, cfg.m_safety);
    out << "single equation: sup of s / (M(s) ||K(1)||) attained near s = " << detail::fmt(single.argmax, 8) << "\n";
    r.ranges.push_back(single.range);
    r.curve = std::move(single.curve);
  } else {
    r.ranges = system_ranges(*s.nl, *s.grid, cfg.rho, cfg.i0, growth.delta, r.k1_norm, r.spectrum.mu1, cfg.m_safety);
  }
  for (const auto& range : r.ranges) out << detail::range_text(range) << "\n";
  return r;
}

inline std::string condition_c_message(const Error& e) { return std::string("(c) FAIL: ") + e.what(); }

/// Everything `solve` computes; the CLI renders it and the acceptance suite
/// inspects it.
struct SolveOutcome {
  int exit = exit_code::kSoftware;
  std::string failed_condition;
  std::string report;
  HypothesisOutcome hypotheses;
  std::optional<RangeOutcome> ranges;
  std::optional<SupersolutionCheck> supersolution;
  std::optional<Subsolution> subsolution;
  std::optional<IterationReport> upper;
  std::optional<IterationReport> lower;
  double bracket_min_gap = std::numeric_limits<double>::quiet_NaN();
  std::optional<Certificate> certificate;
  std::shared_ptr<const Grid> grid;
};

inline SolveOutcome run_solve(const Config& cfg) {
  SolveOutcome o;
  std::ostringstream out;
  const auto finish = [&](int code, std::string condition = "") {
    o.exit = code;
    o.failed_condition = std::move(condition);
    o.report = out.str();
    return o;
  };
  if (cfg.lambdas.empty()) throw Error(ErrorCode::ConfigError, cfg.origin + ": solve needs lambda values");

  const Setup s = build_setup(cfg);
  o.grid = s.grid;
  describe_setup(s, out);

  o.hypotheses = check_hypotheses(s, out);
  if (!o.hypotheses.passed()) {
    out << "hypothesis " << o.hypotheses.failed_condition << " failed; no existence claim can be made\n";
    return finish(exit_code::kHypothesis, o.hypotheses.failed_condition);
  }

  try {
    o.ranges = compute_ranges(s, *o.hypotheses.growth, out);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConditionCViolation && e.code() != ErrorCode::NonpositiveM) throw;
    out << condition_c_message(e) << "\n";
    return finish(exit_code::kHypothesis, "(c)");
  }
  for (const auto& r : o.ranges->ranges) {
    const double lambda = cfg.lambdas[r.component];
    if (!r.contains(lambda))
      warn("lambda" + std::to_string(r.component + 1) + " = " + detail::fmt(lambda) +
           " lies outside the sufficient range; continuing");
  }

  ProblemInstance p(*s.op, *s.nl, cfg.lambdas);
  const auto beta = VectorGridFunction::constant(s.grid, cfg.rho);
  o.supersolution = check_supersolution(p, beta);
  out << "supersolution beta = rho: " << (o.supersolution->holds ? "holds" : "FAILS") << ", margin "
      << detail::fmt(o.supersolution->margin) << "\n";
  if (!o.supersolution->holds) return finish(exit_code::kHypothesis, "supersolution");

  const auto& growth = *o.hypotheses.growth;
  o.subsolution = construct_subsolution(p, o.ranges->spectrum, cfg.i0, growth.delta, growth.rho0);
  try {
    if (o.subsolution) {
      out << "subsolution: eps * phi in component " << cfg.i0 + 1 << " with eps = "
          << detail::fmt(o.subsolution->epsilon) << "\n";
      auto b = bracket_iterate(p, o.subsolution->alpha, beta, cfg.tol, cfg.max_iter);
      o.bracket_min_gap = b.min_gap;
      o.lower = std::move(b.lower);
      o.upper = std::move(b.upper);
      out << "bracket: min over k of (beta_k - alpha_k) = " << detail::fmt(o.bracket_min_gap) << "\n";
    } else {
      out << "subsolution: none found in the eps sweep; iterating from above only\n";
      o.upper = monotone_iterate(p, beta, Direction::FromAbove, cfg.tol, cfg.max_iter);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MonotonicityViolation && e.code() != ErrorCode::NoConvergence) throw;
    out << "iteration FAILED: " << e.what() << "\n";
    return finish(exit_code::kHypothesis, e.code() == ErrorCode::NoConvergence ? "convergence" : "monotonicity");
  }

  const auto& up = *o.upper;
  out << "from above: " << up.iterations << " iterations, ||u - Tu|| = " << detail::fmt(up.residual)
      << ", ||u|| = " << detail::fmt(up.solution.norm(), 10) << "\n";
  if (o.lower)
    out << "from below: " << o.lower->iterations << " iterations, ||u - Tu|| = " << detail::fmt(o.lower->residual)
        << ", ||u|| = " << detail::fmt(o.lower->solution.norm(), 10) << "\n";

  o.certificate = certify(p, up.solution, cfg.tol);
  const auto& c = *o.certificate;
  out << "certificate: " << to_string(c.status) << " (residual " << detail::fmt(c.residual) << ", min "
      << detail::fmt(c.min_value) << ", norm " << detail::fmt(c.norm, 10) << ", in box " << (c.in_box ? "yes" : "no")
      << ")\n";
  if (up.converged_to_zero || c.status == CertificateStatus::Trivial) {
    out << "no nonzero solution found in bracket\n";
    return finish(exit_code::kTrivial);
  }
  return finish(c.certified() ? exit_code::kSuccess : exit_code::kHypothesis, c.certified() ? "" : "certificate");
}

inline void write_solve_artifacts(const SolveOutcome& o, const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  detail::write_text(opt.out_dir / "report.txt", o.report);
  if (o.upper) {
    const auto& u = o.upper->solution;
    std::string header = "x1,x2";
    for (std::size_t i = 0; i < u.n(); ++i) header += ",u" + std::to_string(i + 1);
    detail::CsvFile csv(opt.out_dir / "solution.csv", header);
    for (std::size_t k = 0; k < o.grid->interior_count(); ++k) {
      const Node& node = o.grid->interior_node(k);
      auto& s = csv.stream();
      s << detail::csv_number(node.x1) << ',' << detail::csv_number(node.x2);
      for (const auto& comp : u.components) s << ',' << detail::csv_number(comp.values[static_cast<Eigen::Index>(k)]);
      s << '\n';
    }
    csv.close();
  }
  if (!opt.csv) return;
  {
    detail::CsvFile csv(opt.out_dir / "checks.csv", "condition,result,witness");
    for (const auto& c : o.hypotheses.checks) csv.stream() << c.csv_row() << '\n';
    csv.close();
  }
  if (o.ranges) detail::write_ranges_csv(opt.out_dir / "ranges.csv", o.ranges->ranges);
  if (o.upper) {
    detail::CsvFile csv(opt.out_dir / "iterations.csv", "iteration,direction,norm");
    for (std::size_t k = 0; k < o.upper->history.size(); ++k) csv.row(k, "from-above", o.upper->history[k]);
    if (o.lower)
      for (std::size_t k = 0; k < o.lower->history.size(); ++k) csv.row(k, "from-below", o.lower->history[k]);
    csv.close();
  }
  if (o.certificate) {
    const auto& c = *o.certificate;
    detail::CsvFile csv(opt.out_dir / "certificate.csv", "status,residual,min_value,norm,in_box");
    csv.row(to_string(c.status), c.residual, c.min_value, c.norm, c.in_box);
    csv.close();
  }
}

struct LambdaRangeOutcome {
  int exit = exit_code::kSoftware;
  std::string failed_condition;
  std::string report;
  std::optional<RangeOutcome> ranges;
};

inline LambdaRangeOutcome run_lambda_range(const Config& cfg) {
  LambdaRangeOutcome o;
  std::ostringstream out;
  const Setup s = build_setup(cfg);
  describe_setup(s, out);
  const auto h = check_hypotheses(s, out);
  if (!h.passed()) {
    out << "hypothesis " << h.failed_condition << " failed; the ranges do not apply\n";
    o.exit = exit_code::kHypothesis;
    o.failed_condition = h.failed_condition;
    o.report = out.str();
    return o;
  }
  try {
    o.ranges = compute_ranges(s, *h.growth, out);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConditionCViolation && e.code() != ErrorCode::NonpositiveM) throw;
    out << condition_c_message(e) << "\n";
    o.exit = exit_code::kHypothesis;
    o.failed_condition = "(c)";
    o.report = out.str();
    return o;
  }
  bool any_empty = false;
  for (const auto& r : o.ranges->ranges) any_empty = any_empty || r.empty;
  o.exit = any_empty ? exit_code::kEmptyRange : exit_code::kSuccess;
  o.report = out.str();
  return o;
}

inline void write_lambda_range_artifacts(const LambdaRangeOutcome& o, const RunOptions& opt) {
  if (!opt.csv || !o.ranges) return;
  std::filesystem::create_directories(opt.out_dir);
  detail::write_ranges_csv(opt.out_dir / "ranges.csv", o.ranges->ranges);
  if (!o.ranges->curve.empty()) {
    detail::CsvFile csv(opt.out_dir / "curve.csv", "s,ratio");
    for (const auto& [s, v] : o.ranges->curve) csv.row(s, v);
    csv.close();
  }
}

struct SpectrumOutcome {
  std::string report;
  SpectralEstimate spectrum;
  std::shared_ptr<const Grid> grid;
};

inline SpectrumOutcome run_spectrum(const Config& cfg) {
  SpectrumOutcome o;
  std::ostringstream out;
  const auto grid = build_grid(cfg.domain, cfg.h);
  const auto op = assemble(grid, coefficients_from(cfg), boundary_from(cfg));
  Setup s;
  s.config = cfg;
  s.grid = grid;
  s.op.emplace(op);
  describe_setup(s, out);
  o.spectrum = spectral_radius(op, cfg.spectral_tol, std::max(cfg.max_iter, 1000));
  o.grid = grid;
  out << "r(K) = " << detail::fmt(o.spectrum.r, 12) << "\n";
  out << "mu1 = " << detail::fmt(o.spectrum.mu1, 12) << "\n";
  out << "iterations = " << o.spectrum.iterations << "\n";
  out << "residual = " << detail::fmt(o.spectrum.residual) << "\n";
  o.report = out.str();
  return o;
}

inline void write_spectrum_artifacts(const SpectrumOutcome& o, const RunOptions& opt) {
  if (!opt.csv) return;
  std::filesystem::create_directories(opt.out_dir);
  detail::CsvFile csv(opt.out_dir / "eigenfunction.csv", "x1,x2,phi");
  for (std::size_t k = 0; k < o.grid->interior_count(); ++k) {
    const Node& n = o.grid->interior_node(k);
    csv.row(n.x1, n.x2, o.spectrum.eigenfunction.values[static_cast<Eigen::Index>(k)]);
  }
  csv.close();
}

}  // namespace conesolve
