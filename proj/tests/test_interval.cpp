#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "invkit/interval.hpp"

using namespace invkit;

namespace {

using BinaryOp = std::function<Interval(const Interval&, const Interval&, RoundingPolicy)>;
using UnaryOp = std::function<Interval(const Interval&, RoundingPolicy)>;

Interval random_interval(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  double a = u(rng), b = u(rng);
  if (a > b) std::swap(a, b);
  return Interval(a, b);
}

double sample(std::mt19937_64& rng, const Interval& a) {
  return std::uniform_real_distribution<double>(a.lo(), a.hi())(rng);
}

}  // namespace

TEST_CASE("endpoint arithmetic") {
  CHECK(add(Interval(1, 2), Interval(3, 4)) == Interval(4, 6));
  CHECK(mul(Interval(-1, 2), Interval(-1, 2)) == Interval(-2, 4));
  CHECK(pow_int(Interval(-1, 2), 2) == Interval(0, 4));
  CHECK(pow_int(Interval(-2, -1), 3) == Interval(-8, -1));
  CHECK(sub(Interval(0, 1), Interval(0, 1)) == Interval(-1, 1));
  CHECK(div(Interval(1, 2), Interval(4, 8)) == Interval(0.125, 0.5));
  CHECK(neg(Interval(1, 3)) == Interval(-3, -1));
  CHECK(abs(Interval(-3, 1)) == Interval(0, 3));
}

TEST_CASE("outward rounding strictly widens inexact results") {
  const Interval a(0.1), b(0.2);
  const Interval r = add(a, b, RoundingPolicy::Outward);
  CHECK(r.lo() < 0.1 + 0.2);
  CHECK(r.hi() > 0.1 + 0.2);
  CHECK(r.lo() == std::nextafter(0.1 + 0.2, 0.0));
  const Interval plain = add(a, b);
  CHECK(plain.lo() == plain.hi());
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(div(Interval(1, 2), Interval(-1, 1)), Error);
  try {
    div(Interval(1, 2), Interval(0, 1));
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  CHECK_THROWS_AS(log(Interval(0, 1)), Error);
  CHECK_THROWS_AS(sqrt(Interval(-1, 1)), Error);
  CHECK_THROWS_AS(tan(Interval(1, 2)), Error);
  try {
    add(Interval::empty(), Interval(1));
    FAIL("expected EmptyOperand");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyOperand);
  }
  CHECK_THROWS_AS(Interval(2, 1), Error);
}

TEST_CASE("trigonometric ranges") {
  const Interval s = sin(Interval(0, std::numbers::pi), RoundingPolicy::Outward);
  CHECK(s.hi() == 1.0);
  CHECK(s.lo() <= 0.0);
  CHECK(s.lo() > -1e-15);
  const Interval c = cos(Interval(-0.5, 0.5));
  CHECK(c.hi() == 1.0);
  CHECK(c.lo() == doctest::Approx(std::cos(0.5)));
  CHECK(sin(Interval(-10, 10)) == Interval(-1, 1));
}

TEST_CASE("soundness of elementary operations on random samples") {
  std::mt19937_64 rng(7);
  const std::vector<std::pair<const char*, BinaryOp>> binary = {
      {"add", [](auto& a, auto& b, auto r) { return add(a, b, r); }},
      {"sub", [](auto& a, auto& b, auto r) { return sub(a, b, r); }},
      {"mul", [](auto& a, auto& b, auto r) { return mul(a, b, r); }},
  };
  std::size_t violations = 0;
  for (const auto& [name, op] : binary) {
    for (int pair = 0; pair < 20; ++pair) {
      const Interval a = random_interval(rng, -5, 5), b = random_interval(rng, -5, 5);
      const Interval res = op(a, b, RoundingPolicy::Outward);
      for (int s = 0; s < 1000; ++s) {
        const double x = sample(rng, a), y = sample(rng, b);
        const double v = name[0] == 'a' ? x + y : name[0] == 's' ? x - y : x * y;
        violations += res.contains(v) ? 0 : 1;
      }
    }
  }
  const std::vector<std::tuple<const char*, UnaryOp, std::function<double(double)>, double, double>> unary = {
      {"sin", [](auto& a, auto r) { return sin(a, r); }, [](double x) { return std::sin(x); }, -7, 7},
      {"cos", [](auto& a, auto r) { return cos(a, r); }, [](double x) { return std::cos(x); }, -7, 7},
      {"exp", [](auto& a, auto r) { return exp(a, r); }, [](double x) { return std::exp(x); }, -3, 3},
      {"log", [](auto& a, auto r) { return log(a, r); }, [](double x) { return std::log(x); }, 0.01, 9},
      {"sqrt", [](auto& a, auto r) { return sqrt(a, r); }, [](double x) { return std::sqrt(x); }, 0, 9},
      {"cube", [](auto& a, auto r) { return pow_int(a, 3, r); }, [](double x) { return x * x * x; }, -3, 3},
  };
  for (const auto& [name, op, f, lo, hi] : unary) {
    for (int k = 0; k < 20; ++k) {
      const Interval a = random_interval(rng, lo, hi);
      const Interval res = op(a, RoundingPolicy::Outward);
      for (int s = 0; s < 1000; ++s) violations += res.contains(f(sample(rng, a))) ? 0 : 1;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("inclusion monotonicity on nested operands") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const Interval outer_a = random_interval(rng, -3, 3), outer_b = random_interval(rng, -3, 3);
    const Interval a = random_interval(rng, outer_a.lo(), outer_a.hi());
    const Interval b = random_interval(rng, outer_b.lo(), outer_b.hi());
    for (auto r : {RoundingPolicy::None, RoundingPolicy::Outward}) {
      CHECK(add(outer_a, outer_b, r).contains(add(a, b, r)));
      CHECK(mul(outer_a, outer_b, r).contains(mul(a, b, r)));
      CHECK(pow_int(outer_a, 4, r).contains(pow_int(a, 4, r)));
      CHECK(sin(outer_a, r).contains(sin(a, r)));
      CHECK(exp(outer_a, r).contains(exp(a, r)));
    }
  }
}

TEST_CASE("results shrink to a point as operands shrink") {
  double prev = std::numeric_limits<double>::infinity();
  for (double h = 1.0; h > 1e-9; h *= 0.5) {
    const Interval a(0.7 - h, 0.7 + h);
    const double w = mul(sin(a), exp(a)).width();
    CHECK(w <= prev);
    prev = w;
  }
  CHECK(prev < 1e-7);
}

TEST_CASE("box width and bisection") {
  CHECK(width(Box{Interval(1, 2), Interval(0, 5)}) == 5);
  CHECK(width(Box{Interval(0), Interval(0)}) == 0);
  CHECK(width(Box{Interval(-1, 1), Interval(-1, 1)}) == 2);

  auto [l, r] = bisect(Box{Interval(0, 4), Interval(0, 1)});
  CHECK(l == Box{Interval(0, 2), Interval(0, 1)});
  CHECK(r == Box{Interval(2, 4), Interval(0, 1)});
  auto [l2, r2] = bisect(Box{Interval(0, 1), Interval(0, 1)});
  CHECK(l2 == Box{Interval(0, 0.5), Interval(0, 1)});
  CHECK(r2 == Box{Interval(0.5, 1), Interval(0, 1)});
  auto [l3, r3] = bisect(Box{Interval(-1, 1), Interval(-3, 3)});
  CHECK(l3 == Box{Interval(-1, 1), Interval(-3, 0)});
  CHECK(r3 == Box{Interval(-1, 1), Interval(0, 3)});
  CHECK_THROWS_AS(bisect(Box{Interval(1), Interval(2)}), Error);
}

TEST_CASE("bisection partitions the box") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Box b{random_interval(rng, -4, 4), random_interval(rng, -4, 4), random_interval(rng, -4, 4)};
    if (width(b) == 0) continue;
    auto [l, r] = bisect(b);
    CHECK(hull(l, r) == b);
    CHECK(width(l) <= width(b));
    CHECK(width(r) <= width(b));
    CHECK(volume(l) + volume(r) == doctest::Approx(volume(b)));
    const auto common = intersect(l, r);
    REQUIRE(common);
    CHECK(volume(*common) == 0.0);
  }
}

TEST_CASE("box set operations") {
  CHECK(inflate(Box{Interval(0, 1), Interval(0, 1)}, 0.5) == Box{Interval(-0.5, 1.5), Interval(-0.5, 1.5)});
  CHECK_FALSE(deflate(Box{Interval(0, 1), Interval(0, 1)}, 0.6));
  CHECK(*deflate(Box{Interval(0, 1), Interval(0, 2)}, 0.25) == Box{Interval(0.25, 0.75), Interval(0.25, 1.75)});
  CHECK(*intersect(Box{Interval(0, 2), Interval(0, 2)}, Box{Interval(1, 3), Interval(1, 3)}) ==
        Box{Interval(1, 2), Interval(1, 2)});
  CHECK_FALSE(intersect(Box{Interval(0, 1)}, Box{Interval(2, 3)}));
  CHECK(hull(Box{Interval(0, 1)}, Box{Interval(2, 3)}) == Box{Interval(0, 3)});
  const double inside[] = {0.5, 1.0};
  const double outside[] = {0.5, 1.5};
  CHECK(contains_point(Box{Interval(0, 1), Interval(0, 1)}, inside));
  CHECK_FALSE(contains_point(Box{Interval(0, 1), Interval(0, 1)}, outside));
  CHECK_THROWS_AS(inflate(Box{Interval(0, 1)}, -1), Error);
}

TEST_CASE("box text form round-trips exactly") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const Box b{random_interval(rng, -1e3, 1e3), random_interval(rng, -1e-3, 1e-3)};
    CHECK(parse_box(to_string(b)) == b);
  }
  CHECK(to_string(Box{Interval(0.1, 0.5), Interval(-2, 3)}) == "0.1,0.5,-2,3");
}
