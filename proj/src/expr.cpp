#include "invkit/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace invkit {

struct ExprNode {
  ExprKind kind = ExprKind::Const;
  double value = 0.0;
  Interval enclosure;
  std::size_t var = 0;
  unsigned exponent = 0;
  std::unique_ptr<Expr> ea;
  std::unique_ptr<Expr> eb;
};

namespace {

bool is_unary(ExprKind k) {
  switch (k) {
    case ExprKind::Neg:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Tan:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Sqrt:
    case ExprKind::Abs:
      return true;
    default:
      return false;
  }
}

bool is_binary(ExprKind k) {
  return k == ExprKind::Add || k == ExprKind::Sub || k == ExprKind::Mul || k == ExprKind::Div;
}

}  // namespace

Expr Expr::constant(double value) { return constant(value, Interval(value)); }

Expr Expr::constant(double value, Interval enclosure) {
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::Const;
  node->value = value;
  node->enclosure = enclosure;
  return Expr(std::move(node));
}

Expr Expr::variable(std::size_t index) {
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::Var;
  node->var = index;
  return Expr(std::move(node));
}

Expr Expr::unary(ExprKind kind, Expr child) {
  if (!is_unary(kind)) throw Error(ErrorCode::InvalidArgument, "not a unary expression kind");
  auto node = std::make_shared<ExprNode>();
  node->kind = kind;
  node->ea = std::make_unique<Expr>(std::move(child));
  return Expr(std::move(node));
}

Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs) {
  if (!is_binary(kind)) throw Error(ErrorCode::InvalidArgument, "not a binary expression kind");
  auto node = std::make_shared<ExprNode>();
  node->kind = kind;
  node->ea = std::make_unique<Expr>(std::move(lhs));
  node->eb = std::make_unique<Expr>(std::move(rhs));
  return Expr(std::move(node));
}

Expr Expr::pow(Expr base, unsigned exponent) {
  auto node = std::make_shared<ExprNode>();
  node->kind = ExprKind::PowInt;
  node->exponent = exponent;
  node->ea = std::make_unique<Expr>(std::move(base));
  return Expr(std::move(node));
}

ExprKind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const noexcept { return node_->value; }
const Interval& Expr::enclosure() const noexcept { return node_->enclosure; }
std::size_t Expr::var() const noexcept { return node_->var; }
unsigned Expr::exponent() const noexcept { return node_->exponent; }
const Expr& Expr::child() const noexcept { return *node_->ea; }
const Expr& Expr::lhs() const noexcept { return *node_->ea; }
const Expr& Expr::rhs() const noexcept { return *node_->eb; }

bool operator==(const Expr& x, const Expr& y) {
  if (x.node_ == y.node_) return true;
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case ExprKind::Const: return x.value() == y.value();
    case ExprKind::Var: return x.var() == y.var();
    case ExprKind::PowInt: return x.exponent() == y.exponent() && x.child() == y.child();
    default: break;
  }
  if (is_unary(x.kind())) return x.child() == y.child();
  return x.lhs() == y.lhs() && x.rhs() == y.rhs();
}

// ---------------------------------------------------------------------------
// Parser

ParseError::ParseError(ErrorCode code, ParseDiagnostic diag)
    : Error(code, std::string(error_name(code)) + " at offset " + std::to_string(diag.position) +
                      ": " + diag.message),
      diag_(std::move(diag)) {}

namespace {

class Parser {
 public:
  Parser(std::string_view src, std::size_t n) : src_(src), n_(n) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= src_.size()) fail(ErrorCode::SyntaxError, "empty expression");
    Expr e = parse_sum();
    skip_ws();
    if (pos_ < src_.size()) fail(ErrorCode::SyntaxError, std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, std::string msg) const { fail_at(code, pos_, std::move(msg)); }

  [[noreturn]] void fail_at(ErrorCode code, std::size_t at, std::string msg) const {
    if (!src_.empty() && at >= src_.size()) at = src_.size() - 1;
    throw ParseError(code, ParseDiagnostic{at, std::move(msg)});
  }

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

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(ExprKind::Add, std::move(lhs), parse_product());
      } else if (accept('-')) {
        lhs = Expr::binary(ExprKind::Sub, std::move(lhs), parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(ExprKind::Mul, std::move(lhs), parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(ExprKind::Div, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) {
      Expr operand = parse_unary();
      // A negated literal is stored as a negative constant.
      if (operand.is_const()) return Expr::constant(-operand.value());
      return Expr::unary(ExprKind::Neg, std::move(operand));
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    while (accept('^')) {
      skip_ws();
      const std::size_t at = pos_;
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        fail_at(ErrorCode::NonIntegerExponent, at, "exponent must be a literal nonnegative integer");
      }
      const double v = parse_number_literal();
      if (v != std::floor(v) || v > 1e6) {
        fail_at(ErrorCode::NonIntegerExponent, at, "exponent must be a literal nonnegative integer");
      }
      base = Expr::pow(std::move(base), static_cast<unsigned>(v));
    }
    return base;
  }

  double parse_number_literal() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        fail_at(ErrorCode::SyntaxError, pos_, "malformed exponent in numeric literal");
      }
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      fail_at(ErrorCode::SyntaxError, start, "malformed numeric literal");
    }
    return v;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail(ErrorCode::SyntaxError, "unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail(ErrorCode::SyntaxError, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return Expr::constant(parse_number_literal());
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view word = src_.substr(start, pos_ - start);
      if (word.size() > 1 && word[0] == 'x' &&
          word.find_first_not_of("0123456789", 1) == std::string_view::npos) {
        std::size_t idx = 0;
        std::from_chars(word.data() + 1, word.data() + word.size(), idx);
        if (idx == 0 || idx > n_) {
          fail_at(ErrorCode::UnknownVariable, start,
                  "variable '" + std::string(word) + "' outside x1..x" + std::to_string(n_));
        }
        return Expr::variable(idx - 1);
      }
      ExprKind kind;
      if (word == "sin") kind = ExprKind::Sin;
      else if (word == "cos") kind = ExprKind::Cos;
      else if (word == "tan") kind = ExprKind::Tan;
      else if (word == "exp") kind = ExprKind::Exp;
      else if (word == "log") kind = ExprKind::Log;
      else if (word == "sqrt") kind = ExprKind::Sqrt;
      else if (word == "abs") kind = ExprKind::Abs;
      else fail_at(ErrorCode::UnknownVariable, start, "unknown identifier '" + std::string(word) + "'");
      if (!accept('(')) fail(ErrorCode::SyntaxError, "expected '(' after function name");
      Expr arg = parse_sum();
      if (!accept(')')) fail(ErrorCode::SyntaxError, "expected ')'");
      return Expr::unary(kind, std::move(arg));
    }
    fail(ErrorCode::SyntaxError, std::string("unexpected '") + c + "'");
  }

  std::string_view src_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view src, std::size_t n) { return Parser(src, n).parse(); }

// ---------------------------------------------------------------------------
// Evaluation

double eval_real(const Expr& e, std::span<const double> x) {
  switch (e.kind()) {
    case ExprKind::Const: return e.value();
    case ExprKind::Var:
      if (e.var() >= x.size()) throw Error(ErrorCode::InvalidArgument, "point has too few coordinates");
      return x[e.var()];
    case ExprKind::Neg: return -eval_real(e.child(), x);
    case ExprKind::Sin: return std::sin(eval_real(e.child(), x));
    case ExprKind::Cos: return std::cos(eval_real(e.child(), x));
    case ExprKind::Tan: return std::tan(eval_real(e.child(), x));
    case ExprKind::Exp: return std::exp(eval_real(e.child(), x));
    case ExprKind::Log: {
      const double v = eval_real(e.child(), x);
      if (v <= 0.0) throw Error(ErrorCode::DomainError, "log of a nonpositive value");
      return std::log(v);
    }
    case ExprKind::Sqrt: {
      const double v = eval_real(e.child(), x);
      if (v < 0.0) throw Error(ErrorCode::DomainError, "sqrt of a negative value");
      return std::sqrt(v);
    }
    case ExprKind::Abs: return std::fabs(eval_real(e.child(), x));
    case ExprKind::Add: return eval_real(e.lhs(), x) + eval_real(e.rhs(), x);
    case ExprKind::Sub: return eval_real(e.lhs(), x) - eval_real(e.rhs(), x);
    case ExprKind::Mul: return eval_real(e.lhs(), x) * eval_real(e.rhs(), x);
    case ExprKind::Div: {
      const double num = eval_real(e.lhs(), x);
      const double den = eval_real(e.rhs(), x);
      if (den == 0.0) throw Error(ErrorCode::DomainError, "division by zero");
      return num / den;
    }
    case ExprKind::PowInt: {
      const double base = eval_real(e.child(), x);
      double acc = 1.0;
      for (unsigned i = 0; i < e.exponent(); ++i) acc *= base;
      return acc;
    }
  }
  return 0.0;
}

Interval eval_interval(const Expr& e, const Box& b, RoundingPolicy r) {
  switch (e.kind()) {
    case ExprKind::Const:
      return r == RoundingPolicy::Outward ? e.enclosure() : Interval(e.value());
    case ExprKind::Var:
      if (e.var() >= b.dim()) throw Error(ErrorCode::InvalidArgument, "box has too few dimensions");
      return b[e.var()];
    case ExprKind::Neg: return neg(eval_interval(e.child(), b, r));
    case ExprKind::Sin: return sin(eval_interval(e.child(), b, r), r);
    case ExprKind::Cos: return cos(eval_interval(e.child(), b, r), r);
    case ExprKind::Tan: return tan(eval_interval(e.child(), b, r), r);
    case ExprKind::Exp: return exp(eval_interval(e.child(), b, r), r);
    case ExprKind::Log: return log(eval_interval(e.child(), b, r), r);
    case ExprKind::Sqrt: return sqrt(eval_interval(e.child(), b, r), r);
    case ExprKind::Abs: return abs(eval_interval(e.child(), b, r));
    case ExprKind::Add: return add(eval_interval(e.lhs(), b, r), eval_interval(e.rhs(), b, r), r);
    case ExprKind::Sub: return sub(eval_interval(e.lhs(), b, r), eval_interval(e.rhs(), b, r), r);
    case ExprKind::Mul: return mul(eval_interval(e.lhs(), b, r), eval_interval(e.rhs(), b, r), r);
    case ExprKind::Div: return div(eval_interval(e.lhs(), b, r), eval_interval(e.rhs(), b, r), r);
    case ExprKind::PowInt: return pow_int(eval_interval(e.child(), b, r), e.exponent(), r);
  }
  return Interval::empty();
}

// ---------------------------------------------------------------------------
// Simplifying constructors

namespace simplify {

namespace {

constexpr RoundingPolicy kOut = RoundingPolicy::Outward;

// Point value nearest to the enclosure; used as the printed constant.
Expr folded(double value, Interval enclosure) {
  if (!enclosure.contains(value)) value = enclosure.mid();
  return Expr::constant(value, enclosure);
}

Expr try_fold_unary(ExprKind kind, const Expr& a, bool& ok) {
  ok = true;
  const Interval& x = a.enclosure();
  const double v = a.value();
  try {
    switch (kind) {
      case ExprKind::Sin: return folded(std::sin(v), invkit::sin(x, kOut));
      case ExprKind::Cos: return folded(std::cos(v), invkit::cos(x, kOut));
      case ExprKind::Tan: return folded(std::tan(v), invkit::tan(x, kOut));
      case ExprKind::Exp: return folded(std::exp(v), invkit::exp(x, kOut));
      case ExprKind::Log: return folded(std::log(v), invkit::log(x, kOut));
      case ExprKind::Sqrt: return folded(std::sqrt(v), invkit::sqrt(x, kOut));
      case ExprKind::Abs: return folded(std::fabs(v), invkit::abs(x));
      default: break;
    }
  } catch (const Error&) {
  }
  ok = false;
  return a;
}

}  // namespace

Expr neg(Expr a) {
  if (a.is_const()) return Expr::constant(-a.value(), invkit::neg(a.enclosure()));
  if (a.kind() == ExprKind::Neg) return a.child();
  return Expr::unary(ExprKind::Neg, std::move(a));
}

Expr add(Expr a, Expr b) {
  if (a.is_const() && b.is_const()) {
    return folded(a.value() + b.value(), invkit::add(a.enclosure(), b.enclosure(), kOut));
  }
  if (a.is_const(0.0)) return b;
  if (b.is_const(0.0)) return a;
  return Expr::binary(ExprKind::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b) {
  if (a.is_const() && b.is_const()) {
    return folded(a.value() - b.value(), invkit::sub(a.enclosure(), b.enclosure(), kOut));
  }
  if (b.is_const(0.0)) return a;
  if (a.is_const(0.0)) return neg(std::move(b));
  return Expr::binary(ExprKind::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b) {
  if (a.is_const() && b.is_const()) {
    return folded(a.value() * b.value(), invkit::mul(a.enclosure(), b.enclosure(), kOut));
  }
  if (b.is_const() && !a.is_const()) std::swap(a, b);
  if (a.is_const(0.0)) return Expr::constant(0.0);
  if (a.is_const(1.0)) return b;
  if (a.is_const(-1.0)) return neg(std::move(b));
  if (a.is_const() && b.kind() == ExprKind::Mul && b.lhs().is_const()) {
    return mul(mul(a, b.lhs()), b.rhs());
  }
  return Expr::binary(ExprKind::Mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b) {
  if (a.is_const() && b.is_const() && !b.enclosure().contains(0.0)) {
    return folded(a.value() / b.value(), invkit::div(a.enclosure(), b.enclosure(), kOut));
  }
  if (a.is_const(0.0)) return Expr::constant(0.0);
  if (b.is_const(1.0)) return a;
  return Expr::binary(ExprKind::Div, std::move(a), std::move(b));
}

Expr pow(Expr a, unsigned k) {
  if (k == 0) return Expr::constant(1.0);
  if (k == 1) return a;
  if (a.is_const()) {
    return folded(std::pow(a.value(), static_cast<double>(k)), invkit::pow_int(a.enclosure(), k, kOut));
  }
  return Expr::pow(std::move(a), k);
}

Expr unary(ExprKind kind, Expr a) {
  if (kind == ExprKind::Neg) return neg(std::move(a));
  if (a.is_const()) {
    bool ok = false;
    Expr f = try_fold_unary(kind, a, ok);
    if (ok) return f;
  }
  return Expr::unary(kind, std::move(a));
}

}  // namespace simplify

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, std::size_t i) {
  using namespace simplify;
  switch (e.kind()) {
    case ExprKind::Const: return Expr::constant(0.0);
    case ExprKind::Var: return Expr::constant(e.var() == i ? 1.0 : 0.0);
    case ExprKind::Neg: return neg(differentiate(e.child(), i));
    case ExprKind::Add: return add(differentiate(e.lhs(), i), differentiate(e.rhs(), i));
    case ExprKind::Sub: return sub(differentiate(e.lhs(), i), differentiate(e.rhs(), i));
    case ExprKind::Mul: {
      const Expr& u = e.lhs();
      const Expr& v = e.rhs();
      return add(mul(differentiate(u, i), v), mul(u, differentiate(v, i)));
    }
    case ExprKind::Div: {
      const Expr& u = e.lhs();
      const Expr& v = e.rhs();
      Expr du = differentiate(u, i);
      Expr dv = differentiate(v, i);
      return sub(div(du, v), div(mul(u, dv), pow(v, 2)));
    }
    case ExprKind::PowInt: {
      const Expr& u = e.child();
      const unsigned k = e.exponent();
      if (k == 0) return Expr::constant(0.0);
      return mul(mul(Expr::constant(static_cast<double>(k)), pow(u, k - 1)), differentiate(u, i));
    }
    case ExprKind::Sin:
      return mul(unary(ExprKind::Cos, e.child()), differentiate(e.child(), i));
    case ExprKind::Cos:
      return mul(neg(unary(ExprKind::Sin, e.child())), differentiate(e.child(), i));
    case ExprKind::Tan:
      return mul(add(Expr::constant(1.0), pow(e, 2)), differentiate(e.child(), i));
    case ExprKind::Exp: return mul(e, differentiate(e.child(), i));
    case ExprKind::Log: return div(differentiate(e.child(), i), e.child());
    case ExprKind::Sqrt:
      return div(differentiate(e.child(), i), mul(Expr::constant(2.0), e));
    case ExprKind::Abs:
      throw Error(ErrorCode::NonDifferentiable, "abs has no derivative at zero");
  }
  return Expr::constant(0.0);
}

std::size_t variable_count(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Const: return 0;
    case ExprKind::Var: return e.var() + 1;
    default: break;
  }
  if (is_binary(e.kind())) return std::max(variable_count(e.lhs()), variable_count(e.rhs()));
  return variable_count(e.child());
}

bool contains_abs(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Const:
    case ExprKind::Var: return false;
    case ExprKind::Abs: return true;
    default: break;
  }
  if (is_binary(e.kind())) return contains_abs(e.lhs()) || contains_abs(e.rhs());
  return contains_abs(e.child());
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Binding strength: sums 1, products 2, unary minus 3, powers 4, atoms 5.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Neg: return 3;
    case ExprKind::PowInt: return 4;
    case ExprKind::Const: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    default: return 5;
  }
}

const char* function_name(ExprKind k) {
  switch (k) {
    case ExprKind::Sin: return "sin";
    case ExprKind::Cos: return "cos";
    case ExprKind::Tan: return "tan";
    case ExprKind::Exp: return "exp";
    case ExprKind::Log: return "log";
    case ExprKind::Sqrt: return "sqrt";
    case ExprKind::Abs: return "abs";
    default: return "?";
  }
}

void print(const Expr& e, std::string& out);

void print_operand(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::Const:
      out += format_double(e.value());
      return;
    case ExprKind::Var:
      out += 'x';
      out += std::to_string(e.var() + 1);
      return;
    case ExprKind::Neg:
      out += '-';
      print_operand(e.child(), precedence(e.child()) < 4, out);
      return;
    case ExprKind::PowInt:
      print_operand(e.child(), precedence(e.child()) < 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      const int p = precedence(e);
      // Negative operands are always parenthesized so the tree reparses
      // identically.
      print_operand(e.lhs(), precedence(e.lhs()) < p || precedence(e.lhs()) == 3, out);
      out += e.kind() == ExprKind::Add   ? '+'
             : e.kind() == ExprKind::Sub ? '-'
             : e.kind() == ExprKind::Mul ? '*'
                                         : '/';
      print_operand(e.rhs(), precedence(e.rhs()) <= p || precedence(e.rhs()) == 3, out);
      return;
    }
    default:
      out += function_name(e.kind());
      out += '(';
      print(e.child(), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

}  // namespace invkit
