#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "invkit/error.hpp"

namespace invkit {

/// How elementary interval operations treat floating-point rounding.
/// OUTWARD steps every computed endpoint to the adjacent representable value
/// away from the interval, so the result encloses the exact real result.
enum class RoundingPolicy { None, Outward };

/// Closed interval [lo, hi]. The empty interval is a distinct sentinel and is
/// never represented by lo > hi.
class Interval {
 public:
  /// Degenerate interval [0, 0].
  constexpr Interval() = default;
  constexpr explicit Interval(double point) : lo_(point), hi_(point) {}
  /// Throws InvalidArgument when lo > hi or either endpoint is NaN.
  Interval(double lo, double hi);

  static Interval empty() noexcept;
  static Interval entire() noexcept;

  bool is_empty() const noexcept { return empty_; }
  bool is_bounded() const noexcept;
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return empty_ ? 0.0 : hi_ - lo_; }
  double mid() const noexcept { return 0.5 * (lo_ + hi_); }
  double mag() const noexcept;

  bool contains(double x) const noexcept {
    return !empty_ && lo_ <= x && x <= hi_;
  }
  bool contains(const Interval& other) const noexcept;
  bool intersects(const Interval& other) const noexcept;

  friend bool operator==(const Interval& a, const Interval& b) noexcept {
    if (a.empty_ || b.empty_) return a.empty_ == b.empty_;
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  struct EmptyTag {};
  explicit constexpr Interval(EmptyTag) : empty_(true) {}

  double lo_ = 0.0;
  double hi_ = 0.0;
  bool empty_ = false;
};

Interval intersect(const Interval& a, const Interval& b) noexcept;
Interval hull(const Interval& a, const Interval& b) noexcept;

// Elementary interval extensions. Every operation throws EmptyOperand on an
// empty argument and DomainError when the operand leaves the function domain.
Interval add(const Interval& a, const Interval& b, RoundingPolicy r = RoundingPolicy::None);
Interval sub(const Interval& a, const Interval& b, RoundingPolicy r = RoundingPolicy::None);
Interval mul(const Interval& a, const Interval& b, RoundingPolicy r = RoundingPolicy::None);
/// Division by an interval containing zero is a DomainError (no split).
Interval div(const Interval& a, const Interval& b, RoundingPolicy r = RoundingPolicy::None);
Interval neg(const Interval& a);
/// a^k for a literal k >= 0; even powers of intervals straddling zero start at 0.
Interval pow_int(const Interval& a, unsigned k, RoundingPolicy r = RoundingPolicy::None);
Interval sin(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval cos(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval tan(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval exp(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval log(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval sqrt(const Interval& a, RoundingPolicy r = RoundingPolicy::None);
Interval abs(const Interval& a);

/// Axis-aligned box: the cartesian product of nonempty intervals.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> dims);
  Box(std::initializer_list<Interval> dims);
  /// Box from flattened endpoints lo1,hi1,lo2,hi2,...
  static Box from_bounds(std::span<const double> bounds);
  /// Degenerate box holding a single point.
  static Box point(std::span<const double> x);

  std::size_t dim() const noexcept { return dims_.size(); }
  const Interval& operator[](std::size_t i) const { return dims_[i]; }
  std::span<const Interval> intervals() const noexcept { return dims_; }
  std::vector<double> midpoint() const;

  friend bool operator==(const Box& a, const Box& b) = default;

 private:
  std::vector<Interval> dims_;
};

/// Largest side length.
double width(const Box& b);
/// Index of the widest dimension; ties go to the lowest index.
std::size_t widest_dim(const Box& b);
double volume(const Box& b);
/// Splits at the exact midpoint of the widest dimension. Throws DegenerateBox
/// for zero-width input.
std::pair<Box, Box> bisect(const Box& b);
/// Returns the left/right halves when splitting dimension d at mid.
std::pair<Box, Box> split(const Box& b, std::size_t d, double mid);

std::optional<Box> intersect(const Box& a, const Box& b);
bool intersects(const Box& a, const Box& b);
Box hull(const Box& a, const Box& b);
bool contains(const Box& outer, const Box& inner);
bool contains_point(const Box& b, std::span<const double> x);
/// Minkowski sum with the infinity-norm ball of radius r.
Box inflate(const Box& b, double r);
/// Pontryagin difference with the infinity-norm ball of radius r; empty when
/// some side is shorter than 2r.
std::optional<Box> deflate(const Box& b, double r);

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);
/// "lo1,hi1,lo2,hi2,..." with round-trip exact endpoints.
std::string to_string(const Box& b);
/// Inverse of to_string. Throws InvalidArgument on malformed text.
Box parse_box(std::string_view text);

}  // namespace invkit
