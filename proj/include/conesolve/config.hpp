#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "conesolve/discrete_operator.hpp"
#include "conesolve/error.hpp"
#include "conesolve/expr.hpp"
#include "conesolve/geometry.hpp"

namespace conesolve {

// Flat `key = value` format. `#` starts a comment outside quotes. Values are
// either bare tokens or double-quoted strings; numeric values may be
// constant expressions such as 15*pi/64.
//
//   domain = disk            # or rectangle, with x_min x_max y_min y_max
//   h = 1/64
//   bc = dirichlet           # neumann, robin (rectangles only)
//   robin_b = "1 + x1"
//   a11 = "1"  ... a12 a22 b1 b2 c
//   n = 2
//   f1 = "sqrt(max(u1,u2)) + tan(max(u1,u2))"
//   rho = 15*pi/64           # or rho1, rho2, ...
//   lambda1 = 1.6
//   i0 = 1                   # 1-based
//   delta = 10   rho0 = 1e-3 # optional, swept automatically when absent
struct Config {
  DomainSpec domain = UnitDisk{};
  double h = 1.0 / 64.0;
  BoundarySpec::Kind bc = BoundarySpec::Kind::Dirichlet;
  std::string robin_b = "1";
  std::string a11 = "1", a12 = "0", a22 = "1", b1 = "0", b2 = "0", c = "0";
  std::size_t n = 1;
  std::vector<std::string> f;
  std::vector<double> rho;
  std::vector<double> lambdas;  // empty when not given
  std::size_t i0 = 0;           // 0-based
  std::optional<double> delta;
  std::optional<double> rho0;
  std::optional<double> k1_norm;  // overrides the computed ||K(1)||
  double tol = 1e-9;
  int max_iter = 10000;
  std::uint64_t seed = 20240611;
  std::size_t samples = 10000;
  double m_safety = 1.01;
  double spectral_tol = 1e-10;
  std::string origin = "<config>";
};

namespace detail {

struct RawEntry {
  std::string value;
  bool quoted = false;
  std::size_t line = 0;
};

[[noreturn]] inline void config_error(const std::string& origin, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, origin + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::map<std::string, RawEntry> read_entries(std::string_view text, const std::string& origin) {
  std::map<std::string, RawEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    // Strip a comment, ignoring '#' inside quotes.
    bool in_quotes = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '"') in_quotes = !in_quotes;
      if (line[k] == '#' && !in_quotes) {
        line = line.substr(0, k);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) config_error(origin, line_no, "expected `key = value`");
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) config_error(origin, line_no, "missing key");
    for (char ch : key)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'))
        config_error(origin, line_no, "invalid key `" + key + "`");
    RawEntry entry;
    entry.line = line_no;
    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"' || value.substr(1, value.size() - 2).find('"') != std::string_view::npos)
        config_error(origin, line_no, "unterminated or malformed quoted value for `" + key + "`");
      entry.value = std::string(value.substr(1, value.size() - 2));
      entry.quoted = true;
    } else {
      entry.value = std::string(value);
    }
    if (entry.value.empty()) config_error(origin, line_no, "empty value for `" + key + "`");
    if (!out.emplace(key, entry).second) config_error(origin, line_no, "duplicate key `" + key + "`");
    if (end == text.size()) break;
  }
  return out;
}

class EntryReader {
 public:
  EntryReader(std::map<std::string, RawEntry> entries, std::string origin)
      : entries_(std::move(entries)), origin_(std::move(origin)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const RawEntry* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  std::optional<double> number(const std::string& key) {
    const RawEntry* e = take(key);
    if (!e) return std::nullopt;
    try {
      const double v = eval_constant(e->value);
      if (!std::isfinite(v)) fail(*e, key + " is not finite");
      return v;
    } catch (const Error& err) {
      fail(*e, key + ": " + err.what());
    }
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const RawEntry* e = take(key);
    if (!e) return std::nullopt;
    std::int64_t v = 0;
    std::size_t used = 0;
    try {
      v = std::stoll(e->value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != e->value.size()) fail(*e, key + " must be an integer");
    return v;
  }

  std::optional<std::string> word(const std::string& key) {
    const RawEntry* e = take(key);
    if (!e) return std::nullopt;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return v;
  }

  std::optional<std::string> expression(const std::string& key, const VariableSet& vars) {
    const RawEntry* e = take(key);
    if (!e) return std::nullopt;
    try {
      parse(e->value, vars);
    } catch (const Error& err) {
      fail(*e, key + ": " + err.what());
    }
    return e->value;
  }

  std::size_t line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        config_error(origin_, entry.line, "unknown key `" + key + "`");
  }

  [[noreturn]] void fail(const RawEntry& e, const std::string& msg) const { config_error(origin_, e.line, msg); }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    config_error(origin_, line_of(key), msg);
  }

 private:
  std::map<std::string, RawEntry> entries_;
  std::vector<std::string> used_;
  std::string origin_;
};

}  // namespace detail

inline Config parse_config(std::string_view text, const std::string& origin = "<config>") {
  detail::EntryReader in(detail::read_entries(text, origin), origin);
  Config cfg;
  cfg.origin = origin;

  const std::string domain = in.word("domain").value_or("disk");
  const auto x_min = in.number("x_min"), x_max = in.number("x_max");
  const auto y_min = in.number("y_min"), y_max = in.number("y_max");
  if (domain == "disk") {
    if (x_min || x_max || y_min || y_max) in.fail("domain", "rectangle bounds given for domain = disk");
    cfg.domain = UnitDisk{};
  } else if (domain == "rectangle") {
    if (!(x_min && x_max && y_min && y_max)) in.fail("domain", "rectangle needs x_min, x_max, y_min, y_max");
    if (!(*x_min < *x_max && *y_min < *y_max)) in.fail("domain", "rectangle bounds are inverted or empty");
    cfg.domain = Rectangle{*x_min, *x_max, *y_min, *y_max};
  } else {
    in.fail("domain", "domain must be `disk` or `rectangle`, got `" + domain + "`");
  }

  if (auto h = in.number("h")) cfg.h = *h;
  if (!(cfg.h > 0.0)) in.fail("h", "h must be positive");

  const std::string bc = in.word("bc").value_or("dirichlet");
  if (bc == "dirichlet") {
    cfg.bc = BoundarySpec::Kind::Dirichlet;
  } else if (bc == "neumann") {
    cfg.bc = BoundarySpec::Kind::Neumann;
  } else if (bc == "robin") {
    cfg.bc = BoundarySpec::Kind::Robin;
  } else {
    in.fail("bc", "bc must be dirichlet, neumann or robin, got `" + bc + "`");
  }
  const auto coeff_vars = VariableSet::for_coefficients();
  if (auto b = in.expression("robin_b", coeff_vars)) {
    if (cfg.bc != BoundarySpec::Kind::Robin) in.fail("robin_b", "robin_b is only meaningful with bc = robin");
    cfg.robin_b = *b;
  }
  for (auto [key, slot] : {std::pair{"a11", &cfg.a11}, std::pair{"a12", &cfg.a12}, std::pair{"a22", &cfg.a22},
                           std::pair{"b1", &cfg.b1}, std::pair{"b2", &cfg.b2}, std::pair{"c", &cfg.c}})
    if (auto e = in.expression(key, coeff_vars)) *slot = *e;

  const auto n = in.integer("n");
  if (!n) in.fail("n", "missing required key `n`");
  if (*n < 1 || *n > 64) in.fail("n", "n must be between 1 and 64");
  cfg.n = static_cast<std::size_t>(*n);
  const auto vars = VariableSet::for_system(cfg.n);

  for (std::size_t i = 1; i <= cfg.n; ++i) {
    const std::string key = "f" + std::to_string(i);
    auto e = in.expression(key, vars);
    if (!e) in.fail("n", "missing `" + key + "` for n = " + std::to_string(cfg.n));
    cfg.f.push_back(*e);
  }
  if (in.has("f" + std::to_string(cfg.n + 1)))
    in.fail("f" + std::to_string(cfg.n + 1), "more equations given than n = " + std::to_string(cfg.n));

  const auto indexed = [&](const std::string& base, bool required) {
    std::vector<double> out;
    const auto shared = in.number(base);
    std::size_t given = 0;
    for (std::size_t i = 1; i <= cfg.n; ++i) {
      const auto v = in.number(base + std::to_string(i));
      if (v) ++given;
      if (v && shared) in.fail(base, "both `" + base + "` and `" + base + std::to_string(i) + "` given");
      out.push_back(v ? *v : shared.value_or(0.0));
    }
    if (in.has(base + std::to_string(cfg.n + 1)))
      in.fail(base + std::to_string(cfg.n + 1), "index exceeds n = " + std::to_string(cfg.n));
    if (!shared && given == 0) {
      if (required) in.fail("n", "missing `" + base + "` (or " + base + "1.." + base + std::to_string(cfg.n) + ")");
      out.clear();
    } else if (!shared && given != cfg.n) {
      in.fail("n", "`" + base + "` needs exactly " + std::to_string(cfg.n) + " entries");
    }
    return out;
  };
  cfg.rho = indexed("rho", true);
  for (double r : cfg.rho)
    if (!(r > 0.0)) in.fail("rho", "box bounds rho must be positive");
  cfg.lambdas = indexed("lambda", false);
  for (double l : cfg.lambdas)
    if (!(l > 0.0)) in.fail("lambda", "lambdas must be positive");

  if (auto i0 = in.integer("i0")) {
    if (*i0 < 1 || static_cast<std::size_t>(*i0) > cfg.n)
      in.fail("i0", "i0 must be between 1 and n = " + std::to_string(cfg.n));
    cfg.i0 = static_cast<std::size_t>(*i0 - 1);
  }
  cfg.delta = in.number("delta");
  cfg.rho0 = in.number("rho0");
  if (cfg.delta && !(*cfg.delta > 0.0)) in.fail("delta", "delta must be positive");
  if (cfg.rho0) {
    const double min_rho = *std::min_element(cfg.rho.begin(), cfg.rho.end());
    if (!(*cfg.rho0 > 0.0 && *cfg.rho0 < min_rho)) in.fail("rho0", "rho0 must lie in (0, min rho)");
  }
  if (cfg.rho0.has_value() != cfg.delta.has_value())
    in.fail(cfg.delta ? "delta" : "rho0", "delta and rho0 must be given together (or both omitted for the sweep)");
  cfg.k1_norm = in.number("k1_norm");
  if (cfg.k1_norm && !(*cfg.k1_norm > 0.0)) in.fail("k1_norm", "k1_norm must be positive");

  if (auto v = in.number("tol")) cfg.tol = *v;
  if (!(cfg.tol > 0.0)) in.fail("tol", "tol must be positive");
  if (auto v = in.integer("max_iter")) {
    if (*v < 1 || *v > 100000000) in.fail("max_iter", "max_iter must be a positive integer");
    cfg.max_iter = static_cast<int>(*v);
  }
  if (auto v = in.integer("seed")) {
    if (*v < 0) in.fail("seed", "seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = in.integer("samples")) {
    if (*v < 1) in.fail("samples", "samples must be at least 1");
    cfg.samples = static_cast<std::size_t>(*v);
  }
  if (auto v = in.number("m_safety")) cfg.m_safety = *v;
  if (!(cfg.m_safety >= 1.0)) in.fail("m_safety", "m_safety must be at least 1");
  if (auto v = in.number("spectral_tol")) cfg.spectral_tol = *v;
  if (!(cfg.spectral_tol > 0.0)) in.fail("spectral_tol", "spectral_tol must be positive");

  in.reject_unused();
  return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::filesystem::filesystem_error("cannot open config", path, std::make_error_code(std::errc::no_such_file_or_directory));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

inline CoefficientFn coefficient_from(const std::string& source) {
  auto e = std::make_shared<const Expr>(parse(source, VariableSet::for_coefficients()));
  return [e](double x1, double x2) {
    const double slots[2] = {x1, x2};
    return (*e)(slots);
  };
}

inline EllipticCoefficients coefficients_from(const Config& cfg) {
  EllipticCoefficients k;
  k.a11 = coefficient_from(cfg.a11);
  k.a12 = coefficient_from(cfg.a12);
  k.a22 = coefficient_from(cfg.a22);
  k.b1 = coefficient_from(cfg.b1);
  k.b2 = coefficient_from(cfg.b2);
  k.c = coefficient_from(cfg.c);
  return k;
}

inline BoundarySpec boundary_from(const Config& cfg) {
  switch (cfg.bc) {
    case BoundarySpec::Kind::Dirichlet: return BoundarySpec::dirichlet();
    case BoundarySpec::Kind::Neumann: return BoundarySpec::neumann();
    case BoundarySpec::Kind::Robin: return BoundarySpec::robin(coefficient_from(cfg.robin_b));
  }
  return BoundarySpec::dirichlet();
}

}  // namespace conesolve
