#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "invkit/error.hpp"
#include "invkit/interval.hpp"

namespace invkit {

enum class ExprKind {
  Const,
  Var,
  Neg,
  Sin,
  Cos,
  Tan,
  Exp,
  Log,
  Sqrt,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  PowInt,
};

struct ExprNode;

/// Immutable expression tree over the state variables x1..xn.
///
/// Variables are stored 0-based (x1 has index 0). A constant carries its
/// double value plus a rigorous enclosure of the exact real it stands for;
/// the two differ only for constants produced by folding.
class Expr {
 public:
  static Expr constant(double value);
  static Expr constant(double value, Interval enclosure);
  static Expr variable(std::size_t index);
  static Expr unary(ExprKind kind, Expr child);
  static Expr binary(ExprKind kind, Expr lhs, Expr rhs);
  static Expr pow(Expr base, unsigned exponent);

  ExprKind kind() const noexcept;
  double value() const noexcept;
  const Interval& enclosure() const noexcept;
  std::size_t var() const noexcept;
  unsigned exponent() const noexcept;
  const Expr& child() const noexcept;
  const Expr& lhs() const noexcept;
  const Expr& rhs() const noexcept;

  bool is_const() const noexcept { return kind() == ExprKind::Const; }
  bool is_const(double v) const noexcept { return is_const() && value() == v; }

  /// Structural equality (constants compare by value).
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

/// Parse diagnostic: character offset into the source and a message.
struct ParseDiagnostic {
  std::size_t position = 0;
  std::string message;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, ParseDiagnostic diag);
  const ParseDiagnostic& diagnostic() const noexcept { return diag_; }

 private:
  ParseDiagnostic diag_;
};

/// Parses an arithmetic expression over x1..x{n}.
///
/// Grammar (precedence high to low): `^` with a literal nonnegative integer
/// exponent, unary minus, `*` `/`, `+` `-`; binary operators associate left.
/// Functions: sin cos tan exp log sqrt abs. Literals are decimal or
/// scientific. Throws ParseError with SyntaxError, UnknownVariable or
/// NonIntegerExponent.
Expr parse_expr(std::string_view src, std::size_t n);

/// Evaluates at a point. Throws DomainError at invalid points.
double eval_real(const Expr& e, std::span<const double> x);

/// Natural interval extension over a box.
Interval eval_interval(const Expr& e, const Box& b, RoundingPolicy rounding);

/// Symbolic partial derivative with respect to the 0-based variable index.
/// Throws NonDifferentiable when the expression contains abs.
Expr differentiate(const Expr& e, std::size_t index);

/// Largest variable index referenced plus one (0 for constant expressions).
std::size_t variable_count(const Expr& e);
bool contains_abs(const Expr& e);

/// Prints with the minimal parentheses needed to reparse the same tree.
std::string to_string(const Expr& e);

namespace simplify {
// Smart constructors used by the differentiator: constant folding plus
// zero/one identities. Folded constants keep a rigorous enclosure.
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr a, unsigned k);
Expr unary(ExprKind kind, Expr a);
}  // namespace simplify

}  // namespace invkit
