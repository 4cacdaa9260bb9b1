#include "invkit/interval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace invkit {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptyOperand: return "EmptyOperand";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::NonIntegerExponent: return "NonIntegerExponent";
    case ErrorCode::NonDifferentiable: return "NonDifferentiable";
    case ErrorCode::NotConverging: return "NotConverging";
    case ErrorCode::OriginOutside: return "OriginOutside";
    case ErrorCode::MisalignedBox: return "MisalignedBox";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IterationBudgetExceeded: return "IterationBudgetExceeded";
    case ErrorCode::CertificationFailure: return "CertificationFailure";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::ConformanceBreach: return "ConformanceBreach";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double down(double x, RoundingPolicy r) {
  return r == RoundingPolicy::Outward ? std::nextafter(x, -kInf) : x;
}

double up(double x, RoundingPolicy r) {
  return r == RoundingPolicy::Outward ? std::nextafter(x, kInf) : x;
}

void require_nonempty(const Interval& a) {
  if (a.is_empty()) throw Error(ErrorCode::EmptyOperand, "interval operand is empty");
}

Interval rounded(double lo, double hi, RoundingPolicy r) {
  return Interval(down(lo, r), up(hi, r));
}

// True when some offset + m * period (m integer) may lie in [lo, hi]. The
// test is fuzzed outward so a critical point is never missed.
bool may_contain_critical(double lo, double hi, double offset, double period) {
  const double tlo = (lo - offset) / period;
  const double thi = (hi - offset) / period;
  const double m = std::ceil(tlo - 1e-12 * (1.0 + std::fabs(tlo)));
  return m <= thi + 1e-12 * (1.0 + std::fabs(thi));
}

// Bounds on x^k for x >= 0 by repeated multiplication.
double pow_nonneg(double x, unsigned k, bool upper, RoundingPolicy r) {
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;
  double acc = 1.0;
  for (unsigned i = 0; i < k; ++i) {
    acc *= x;
    acc = upper ? up(acc, r) : down(acc, r);
  }
  return upper ? acc : std::max(acc, 0.0);
}

}  // namespace

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    std::ostringstream os;
    os << "invalid interval [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

Interval Interval::empty() noexcept { return Interval(EmptyTag{}); }

Interval Interval::entire() noexcept {
  Interval r;
  r.lo_ = -kInf;
  r.hi_ = kInf;
  return r;
}

bool Interval::is_bounded() const noexcept {
  return !empty_ && std::isfinite(lo_) && std::isfinite(hi_);
}

double Interval::mag() const noexcept {
  return empty_ ? 0.0 : std::max(std::fabs(lo_), std::fabs(hi_));
}

bool Interval::contains(const Interval& other) const noexcept {
  if (other.empty_) return true;
  if (empty_) return false;
  return lo_ <= other.lo_ && other.hi_ <= hi_;
}

bool Interval::intersects(const Interval& other) const noexcept {
  if (empty_ || other.empty_) return false;
  return lo_ <= other.hi_ && other.lo_ <= hi_;
}

Interval intersect(const Interval& a, const Interval& b) noexcept {
  if (!a.intersects(b)) return Interval::empty();
  return Interval(std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}

Interval hull(const Interval& a, const Interval& b) noexcept {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  return Interval(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

Interval add(const Interval& a, const Interval& b, RoundingPolicy r) {
  require_nonempty(a);
  require_nonempty(b);
  return rounded(a.lo() + b.lo(), a.hi() + b.hi(), r);
}

Interval sub(const Interval& a, const Interval& b, RoundingPolicy r) {
  require_nonempty(a);
  require_nonempty(b);
  return rounded(a.lo() - b.hi(), a.hi() - b.lo(), r);
}

Interval mul(const Interval& a, const Interval& b, RoundingPolicy r) {
  require_nonempty(a);
  require_nonempty(b);
  const double p1 = a.lo() * b.lo();
  const double p2 = a.lo() * b.hi();
  const double p3 = a.hi() * b.lo();
  const double p4 = a.hi() * b.hi();
  return rounded(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), r);
}

Interval div(const Interval& a, const Interval& b, RoundingPolicy r) {
  require_nonempty(a);
  require_nonempty(b);
  if (b.contains(0.0)) {
    throw Error(ErrorCode::DomainError, "division by an interval containing zero");
  }
  const double q1 = a.lo() / b.lo();
  const double q2 = a.lo() / b.hi();
  const double q3 = a.hi() / b.lo();
  const double q4 = a.hi() / b.hi();
  return rounded(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}), r);
}

Interval neg(const Interval& a) {
  require_nonempty(a);
  return Interval(-a.hi(), -a.lo());
}

Interval pow_int(const Interval& a, unsigned k, RoundingPolicy r) {
  require_nonempty(a);
  if (k == 0) return Interval(1.0);
  if (k == 1) return a;
  const double lo = a.lo();
  const double hi = a.hi();
  if (k % 2 == 1) {
    const double l = lo >= 0.0 ? pow_nonneg(lo, k, false, r) : -pow_nonneg(-lo, k, true, r);
    const double h = hi >= 0.0 ? pow_nonneg(hi, k, true, r) : -pow_nonneg(-hi, k, false, r);
    return Interval(l, h);
  }
  if (lo >= 0.0) return Interval(pow_nonneg(lo, k, false, r), pow_nonneg(hi, k, true, r));
  if (hi <= 0.0) return Interval(pow_nonneg(-hi, k, false, r), pow_nonneg(-lo, k, true, r));
  return Interval(0.0, pow_nonneg(std::max(-lo, hi), k, true, r));
}

Interval sin(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  if (!a.is_bounded() || a.width() >= 2.0 * std::numbers::pi) return Interval(-1.0, 1.0);
  const double s1 = std::sin(a.lo());
  const double s2 = std::sin(a.hi());
  double lo = down(std::min(s1, s2), r);
  double hi = up(std::max(s1, s2), r);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (may_contain_critical(a.lo(), a.hi(), 0.5 * std::numbers::pi, two_pi)) hi = 1.0;
  if (may_contain_critical(a.lo(), a.hi(), -0.5 * std::numbers::pi, two_pi)) lo = -1.0;
  return Interval(std::max(lo, -1.0), std::min(hi, 1.0));
}

Interval cos(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  if (!a.is_bounded() || a.width() >= 2.0 * std::numbers::pi) return Interval(-1.0, 1.0);
  const double c1 = std::cos(a.lo());
  const double c2 = std::cos(a.hi());
  double lo = down(std::min(c1, c2), r);
  double hi = up(std::max(c1, c2), r);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (may_contain_critical(a.lo(), a.hi(), 0.0, two_pi)) hi = 1.0;
  if (may_contain_critical(a.lo(), a.hi(), std::numbers::pi, two_pi)) lo = -1.0;
  return Interval(std::max(lo, -1.0), std::min(hi, 1.0));
}

Interval tan(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  if (!a.is_bounded() || a.width() >= std::numbers::pi ||
      may_contain_critical(a.lo(), a.hi(), 0.5 * std::numbers::pi, std::numbers::pi)) {
    throw Error(ErrorCode::DomainError, "tan over an interval containing a pole");
  }
  return rounded(std::tan(a.lo()), std::tan(a.hi()), r);
}

Interval exp(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  return Interval(std::max(down(std::exp(a.lo()), r), 0.0), up(std::exp(a.hi()), r));
}

Interval log(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  if (a.lo() <= 0.0) throw Error(ErrorCode::DomainError, "log of an interval touching zero or below");
  return rounded(std::log(a.lo()), std::log(a.hi()), r);
}

Interval sqrt(const Interval& a, RoundingPolicy r) {
  require_nonempty(a);
  if (a.lo() < 0.0) throw Error(ErrorCode::DomainError, "sqrt of an interval with negative part");
  return Interval(std::max(down(std::sqrt(a.lo()), r), 0.0), up(std::sqrt(a.hi()), r));
}

Interval abs(const Interval& a) {
  require_nonempty(a);
  if (a.lo() >= 0.0) return a;
  if (a.hi() <= 0.0) return neg(a);
  return Interval(0.0, std::max(-a.lo(), a.hi()));
}

// ---------------------------------------------------------------------------
// Box

Box::Box(std::vector<Interval> dims) : dims_(std::move(dims)) {
  for (const auto& d : dims_) {
    if (d.is_empty()) throw Error(ErrorCode::EmptyOperand, "box with an empty component");
  }
}

Box::Box(std::initializer_list<Interval> dims) : Box(std::vector<Interval>(dims)) {}

Box Box::from_bounds(std::span<const double> bounds) {
  if (bounds.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "box bounds need an even number of values");
  }
  std::vector<Interval> dims;
  dims.reserve(bounds.size() / 2);
  for (std::size_t i = 0; i < bounds.size(); i += 2) dims.emplace_back(bounds[i], bounds[i + 1]);
  return Box(std::move(dims));
}

Box Box::point(std::span<const double> x) {
  std::vector<Interval> dims;
  dims.reserve(x.size());
  for (double v : x) dims.emplace_back(v);
  return Box(std::move(dims));
}

std::vector<double> Box::midpoint() const {
  std::vector<double> m(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) m[i] = dims_[i].mid();
  return m;
}

double width(const Box& b) {
  double w = 0.0;
  for (const auto& d : b.intervals()) w = std::max(w, d.width());
  return w;
}

std::size_t widest_dim(const Box& b) {
  std::size_t best = 0;
  double w = -1.0;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (b[i].width() > w) {
      w = b[i].width();
      best = i;
    }
  }
  return best;
}

double volume(const Box& b) {
  double v = 1.0;
  for (const auto& d : b.intervals()) v *= d.width();
  return v;
}

std::pair<Box, Box> split(const Box& b, std::size_t d, double mid) {
  std::vector<Interval> left(b.intervals().begin(), b.intervals().end());
  std::vector<Interval> right = left;
  left[d] = Interval(b[d].lo(), mid);
  right[d] = Interval(mid, b[d].hi());
  return {Box(std::move(left)), Box(std::move(right))};
}

std::pair<Box, Box> bisect(const Box& b) {
  if (b.dim() == 0 || width(b) <= 0.0) {
    throw Error(ErrorCode::DegenerateBox, "cannot bisect a zero-width box");
  }
  const std::size_t d = widest_dim(b);
  return split(b, d, b[d].mid());
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  std::vector<Interval> dims;
  dims.reserve(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    Interval s = intersect(a[i], b[i]);
    if (s.is_empty()) return std::nullopt;
    dims.push_back(s);
  }
  return Box(std::move(dims));
}

bool intersects(const Box& a, const Box& b) {
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (!a[i].intersects(b[i])) return false;
  }
  return true;
}

Box hull(const Box& a, const Box& b) {
  std::vector<Interval> dims;
  dims.reserve(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) dims.push_back(hull(a[i], b[i]));
  return Box(std::move(dims));
}

bool contains(const Box& outer, const Box& inner) {
  for (std::size_t i = 0; i < outer.dim(); ++i) {
    if (!outer[i].contains(inner[i])) return false;
  }
  return true;
}

bool contains_point(const Box& b, std::span<const double> x) {
  if (x.size() != b.dim()) return false;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (!b[i].contains(x[i])) return false;
  }
  return true;
}

Box inflate(const Box& b, double r) {
  if (r < 0.0) throw Error(ErrorCode::NegativeRadius, "inflate radius must be nonnegative");
  std::vector<Interval> dims;
  dims.reserve(b.dim());
  for (const auto& d : b.intervals()) dims.emplace_back(d.lo() - r, d.hi() + r);
  return Box(std::move(dims));
}

std::optional<Box> deflate(const Box& b, double r) {
  if (r < 0.0) throw Error(ErrorCode::NegativeRadius, "deflate radius must be nonnegative");
  std::vector<Interval> dims;
  dims.reserve(b.dim());
  for (const auto& d : b.intervals()) {
    const double lo = d.lo() + r;
    const double hi = d.hi() - r;
    if (lo > hi) return std::nullopt;
    dims.emplace_back(lo, hi);
  }
  return Box(std::move(dims));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_string(const Box& b) {
  std::string out;
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) out += ',';
    out += format_double(b[i].lo());
    out += ',';
    out += format_double(b[i].hi());
  }
  return out;
}

Box parse_box(std::string_view text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::InvalidArgument, "malformed box text: '" + std::string(text) + "'");
    }
    values.push_back(v);
    pos = end + 1;
  }
  return Box::from_bounds(values);
}

}  // namespace invkit
