#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conesolve/error.hpp"

namespace conesolve {

/// Ordered set of variable names an expression may reference. Several names
/// may share one slot (the scalar alias `s` for `u1`).
class VariableSet {
 public:
  VariableSet() = default;

  /// Adds `name` as a new slot and returns the slot index.
  std::size_t add(std::string name) {
    const std::size_t slot = slot_names_.size();
    slot_names_.push_back(name);
    slots_.emplace(std::move(name), slot);
    return slot;
  }

  void alias(std::string name, std::size_t slot) { slots_.emplace(std::move(name), slot); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = slots_.find(std::string(name));
    if (it == slots_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t slot_count() const noexcept { return slot_names_.size(); }
  const std::string& slot_name(std::size_t slot) const { return slot_names_.at(slot); }

  /// The variable layout used for nonlinearities of an n-component system:
  /// slots x1, x2, u1..un, with `s` aliasing u1 when n == 1.
  static VariableSet for_system(std::size_t n) {
    VariableSet v;
    v.add("x1");
    v.add("x2");
    for (std::size_t k = 1; k <= n; ++k) v.add("u" + std::to_string(k));
    if (n == 1) v.alias("s", 2);
    return v;
  }

  /// Coefficient functions depend on position only.
  static VariableSet for_coefficients() {
    VariableSet v;
    v.add("x1");
    v.add("x2");
    return v;
  }

 private:
  std::map<std::string, std::size_t> slots_;
  std::vector<std::string> slot_names_;
};

enum class Function { Sqrt, Tan, Sin, Cos, Exp, Log, Abs, Min, Max, Pow };

inline std::string_view function_name(Function f) {
  switch (f) {
    case Function::Sqrt: return "sqrt";
    case Function::Tan: return "tan";
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Exp: return "exp";
    case Function::Log: return "log";
    case Function::Abs: return "abs";
    case Function::Min: return "min";
    case Function::Max: return "max";
    case Function::Pow: return "pow";
  }
  return "?";
}

struct ExprNode {
  enum class Kind { Constant, Var, Unary, Binary, Call };

  Kind kind = Kind::Constant;
  double value = 0.0;       // Constant
  std::string name;         // Var
  std::size_t slot = 0;     // Var
  char op = 0;              // Unary ('-') and Binary ('+', '-', '*', '/', '^')
  Function fn = Function::Sqrt;  // Call
  std::vector<std::shared_ptr<const ExprNode>> children;
};

using ExprNodePtr = std::shared_ptr<const ExprNode>;

/// Structural equality. Variable nodes compare by name.
inline bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
  switch (a.kind) {
    case ExprNode::Kind::Constant:
      if (a.value != b.value) return false;
      break;
    case ExprNode::Kind::Var:
      if (a.name != b.name) return false;
      break;
    case ExprNode::Kind::Unary:
    case ExprNode::Kind::Binary:
      if (a.op != b.op) return false;
      break;
    case ExprNode::Kind::Call:
      if (a.fn != b.fn) return false;
      break;
  }
  for (std::size_t k = 0; k < a.children.size(); ++k)
    if (!structurally_equal(*a.children[k], *b.children[k])) return false;
  return true;
}

namespace detail {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      out += format_number(n.value);
      return;
    case ExprNode::Kind::Var:
      out += n.name;
      return;
    case ExprNode::Kind::Unary:
      out += "(-";
      print_node(*n.children[0], out);
      out += ')';
      return;
    case ExprNode::Kind::Binary:
      out += '(';
      print_node(*n.children[0], out);
      out += ' ';
      out += n.op;
      out += ' ';
      print_node(*n.children[1], out);
      out += ')';
      return;
    case ExprNode::Kind::Call:
      out += function_name(n.fn);
      out += '(';
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        if (k) out += ", ";
        print_node(*n.children[k], out);
      }
      out += ')';
      return;
  }
}

// Distance from x to the nearest pole pi/2 + k*pi of tan.
inline double distance_to_tan_pole(double x) {
  constexpr double pi = std::numbers::pi;
  const double k = std::round((x - pi / 2) / pi);
  return std::abs(x - (pi / 2 + k * pi));
}

inline double checked(double result, const char* what, double arg) {
  if (!std::isfinite(result)) throw EvalDomainError(what, arg);
  return result;
}

inline double eval_node(const ExprNode& n, std::span<const double> slots) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return n.value;
    case ExprNode::Kind::Var: {
      const double v = slots[n.slot];
      if (!std::isfinite(v)) throw EvalDomainError(n.name, v);
      return v;
    }
    case ExprNode::Kind::Unary:
      return -eval_node(*n.children[0], slots);
    case ExprNode::Kind::Binary: {
      const double a = eval_node(*n.children[0], slots);
      const double b = eval_node(*n.children[1], slots);
      switch (n.op) {
        case '+': return checked(a + b, "+", a);
        case '-': return checked(a - b, "-", a);
        case '*': return checked(a * b, "*", a);
        case '/':
          if (b == 0.0) throw EvalDomainError("/", b);
          return checked(a / b, "/", b);
        case '^': return checked(std::pow(a, b), "^", a);
      }
      throw EvalDomainError(std::string(1, n.op), a);
    }
    case ExprNode::Kind::Call: {
      const double a = eval_node(*n.children[0], slots);
      switch (n.fn) {
        case Function::Sqrt:
          if (a < 0.0) throw EvalDomainError("sqrt", a);
          return std::sqrt(a);
        case Function::Tan:
          if (distance_to_tan_pole(a) < 1e-8) throw EvalDomainError("tan", a);
          return checked(std::tan(a), "tan", a);
        case Function::Sin: return std::sin(a);
        case Function::Cos: return std::cos(a);
        case Function::Exp: return checked(std::exp(a), "exp", a);
        case Function::Log:
          if (a <= 0.0) throw EvalDomainError("log", a);
          return std::log(a);
        case Function::Abs: return std::abs(a);
        case Function::Min:
        case Function::Max: {
          double acc = a;
          for (std::size_t k = 1; k < n.children.size(); ++k) {
            const double v = eval_node(*n.children[k], slots);
            acc = (n.fn == Function::Min) ? std::min(acc, v) : std::max(acc, v);
          }
          return acc;
        }
        case Function::Pow:
          return checked(std::pow(a, eval_node(*n.children[1], slots)), "pow", a);
      }
      throw EvalDomainError(std::string(function_name(n.fn)), a);
    }
  }
  return 0.0;
}

inline bool mentions(const ExprNode& n, std::size_t slot) {
  if (n.kind == ExprNode::Kind::Var && n.slot == slot) return true;
  for (const auto& c : n.children)
    if (mentions(*c, slot)) return true;
  return false;
}

}  // namespace detail

/// An immutable parsed expression bound to a variable layout.
class Expr {
 public:
  Expr(ExprNodePtr root, VariableSet vars, std::string source)
      : root_(std::move(root)), vars_(std::move(vars)), source_(std::move(source)) {}

  const ExprNode& root() const noexcept { return *root_; }
  const VariableSet& variables() const noexcept { return vars_; }
  const std::string& source() const noexcept { return source_; }

  /// Evaluates with slot values laid out as in variables().
  double operator()(std::span<const double> slots) const { return detail::eval_node(*root_, slots); }

  /// Fully parenthesized rendering that reparses to an identical tree.
  std::string to_string() const {
    std::string out;
    detail::print_node(*root_, out);
    return out;
  }

  bool depends_on(std::string_view name) const {
    const auto slot = vars_.find(name);
    return slot && detail::mentions(*root_, *slot);
  }

  friend bool operator==(const Expr& a, const Expr& b) { return structurally_equal(*a.root_, *b.root_); }

 private:
  ExprNodePtr root_;
  VariableSet vars_;
  std::string source_;
};

namespace detail {

// Grammar, loosest to tightest:
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?        right-associative
//   primary := number | name | name '(' sum (',' sum)* ')' | '(' sum ')'
// Unary minus binds looser than '^', so -2^2 == -(2^2).
class Parser {
 public:
  Parser(std::string_view src, const VariableSet& vars) : src_(src), vars_(vars) {}

  ExprNodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(ErrorCode::SyntaxError, "empty expression", 1);
    auto node = sum();
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError(ErrorCode::SyntaxError, "unexpected '" + std::string(1, src_[pos_]) + "'", pos_ + 1);
    return node;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      const std::string found = pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input";
      throw ParseError(ErrorCode::SyntaxError, "expected '" + std::string(1, c) + "', found " + found, pos_ + 1);
    }
  }

  static ExprNodePtr binary(char op, ExprNodePtr l, ExprNodePtr r) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->op = op;
    n->children = {std::move(l), std::move(r)};
    return n;
  }

  ExprNodePtr sum() {
    auto left = product();
    for (;;) {
      if (accept('+')) {
        left = binary('+', left, product());
      } else if (accept('-')) {
        left = binary('-', left, product());
      } else {
        return left;
      }
    }
  }

  ExprNodePtr product() {
    auto left = unary();
    for (;;) {
      if (accept('*')) {
        left = binary('*', left, unary());
      } else if (accept('/')) {
        left = binary('/', left, unary());
      } else {
        return left;
      }
    }
  }

  ExprNodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Unary;
      n->op = '-';
      n->children = {unary()};
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  ExprNodePtr power() {
    auto base = primary();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }

  ExprNodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(ErrorCode::SyntaxError, "unexpected end of input", pos_ + 1);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    throw ParseError(ErrorCode::SyntaxError, "unexpected '" + std::string(1, c) + "'", pos_ + 1);
  }

  ExprNodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
      throw ParseError(ErrorCode::SyntaxError, "malformed number '" + std::string(first, last) + "'", start + 1);
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Constant;
    n->value = value;
    return n;
  }

  static std::optional<Function> lookup_function(std::string_view id) {
    static const std::map<std::string_view, Function> table{
        {"sqrt", Function::Sqrt}, {"tan", Function::Tan}, {"sin", Function::Sin}, {"cos", Function::Cos},
        {"exp", Function::Exp},   {"log", Function::Log}, {"abs", Function::Abs}, {"min", Function::Min},
        {"max", Function::Max},   {"pow", Function::Pow}};
    auto it = table.find(id);
    if (it == table.end()) return std::nullopt;
    return it->second;
  }

  ExprNodePtr name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view id = src_.substr(start, pos_ - start);

    if (accept('(')) {
      const auto fn = lookup_function(id);
      if (!fn) throw ParseError(ErrorCode::UnknownFunction, "unknown function '" + std::string(id) + "'", start + 1);
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Call;
      n->fn = *fn;
      n->children.push_back(sum());
      while (accept(',')) n->children.push_back(sum());
      expect(')');
      const std::size_t argc = n->children.size();
      const bool ok = (*fn == Function::Min || *fn == Function::Max) ? argc >= 2
                      : (*fn == Function::Pow)                       ? argc == 2
                                                                     : argc == 1;
      if (!ok)
        throw ParseError(ErrorCode::ArityError,
                         "wrong number of arguments (" + std::to_string(argc) + ") for '" + std::string(id) + "'",
                         start + 1);
      return n;
    }

    if (id == "pi") {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Constant;
      n->value = std::numbers::pi;
      return n;
    }
    const auto slot = vars_.find(id);
    if (!slot) throw ParseError(ErrorCode::UnknownVariable, "unknown variable '" + std::string(id) + "'", start + 1);
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Var;
    n->name = std::string(id);
    n->slot = *slot;
    return n;
  }

  std::string_view src_;
  const VariableSet& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `source` against the allowed variables. `pi` is accepted as a
/// named constant.
inline Expr parse(std::string_view source, const VariableSet& allowed_vars) {
  detail::Parser p(source, allowed_vars);
  return Expr(p.parse(), allowed_vars, std::string(source));
}

/// Name-keyed evaluation. Every slot the expression mentions must be bound.
inline double eval(const Expr& expr, const std::map<std::string, double>& bindings) {
  const auto& vars = expr.variables();
  std::vector<double> slots(vars.slot_count(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> bound(vars.slot_count(), false);
  for (const auto& [name, value] : bindings) {
    if (auto slot = vars.find(name)) {
      slots[*slot] = value;
      bound[*slot] = true;
    }
  }
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (!bound[s] && detail::mentions(expr.root(), s))
      throw Error(ErrorCode::MissingBinding, "no value bound for '" + vars.slot_name(s) + "'");
  }
  return expr(slots);
}

/// Evaluates a constant expression such as "15*pi/64".
inline double eval_constant(std::string_view source) {
  return parse(source, VariableSet{})(std::span<const double>{});
}

}  // namespace conesolve
