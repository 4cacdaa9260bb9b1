#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "invkit/config.hpp"
#include "invkit/synthesis.hpp"

using namespace invkit;

namespace {

const Box kOmega{Interval(-1, 1), Interval(-1, 1)};

SwitchedSystem single(std::vector<std::string> update) {
  std::vector<Expr> exprs;
  for (const auto& s : update) exprs.push_back(parse_expr(s, update.size()));
  return SwitchedSystem(update.size(), {Mode{"m", std::move(exprs)}});
}

LoadedConfig bundled(const char* name) { return load_config(std::string(INVKIT_CONFIG_DIR) + "/" + name); }

SynthesisConfig with_eps(double eps) {
  SynthesisConfig cfg;
  cfg.epsilon = eps;
  return cfg;
}

// The leaves of b at a given side length, in canonical subdivision.
void leaves_of(const Box& b, double side, std::vector<Box>& out) {
  if (width(b) <= side) {
    out.push_back(b);
    return;
  }
  auto [l, r] = bisect(b);
  leaves_of(l, side, out);
  leaves_of(r, side, out);
}

bool cells_equal(const std::vector<PavingCell>& a, const std::vector<PavingCell>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].box == b[i].box) || a[i].modes != b[i].modes || a[i].undetermined != b[i].undetermined) return false;
  }
  return true;
}

// Cells tile the region: volumes add up and every cell lies in it.
void check_partition(const SynthesisResult& r) {
  double total = 0.0;
  for (const auto& c : r.cells) {
    total += volume(c.box);
    CHECK(r.region.contains_box(c.box));
  }
  CHECK(total == doctest::Approx(r.region.volume()).epsilon(1e-12));
  CHECK(std::is_sorted(r.cells.begin(), r.cells.end(), [](const auto& a, const auto& b) { return box_less(a.box, b.box); }));
}

}  // namespace

TEST_CASE("cpre examples") {
  const Region omega = Region::full({kOmega});
  const std::vector<Box> xs{kOmega};
  const ClassifiedPaving c = cpre(single({"0.5*x1", "0.5*x2"}), omega, xs, with_eps(0.1));
  REQUIRE(c.inside.size() == 1);
  CHECK(c.inside[0].first == kOmega);
  CHECK(c.inside[0].second == ModeSet::single(0));
  CHECK(c.undetermined.empty());
  CHECK(c.outside.empty());

  const ClassifiedPaving away = cpre(single({"x1+10", "x2"}), omega, xs, with_eps(0.1));
  CHECK(away.inside.empty());
  CHECK(away.undetermined.empty());
  CHECK(away.outside == xs);
}

TEST_CASE("cpre matches a brute-force oracle on a linear toy") {
  SynthesisConfig cfg = with_eps(0.5);
  cfg.rounding = RoundingPolicy::None;
  const Region omega = Region::full({kOmega});
  const std::vector<Box> xs{kOmega};
  const ClassifiedPaving c = cpre(single({"2*x1", "2*x2"}), omega, xs, cfg);

  // Oracle: classify each leaf of side 0.25 by its exact image under x -> 2x.
  std::vector<Box> leaves;
  leaves_of(kOmega, 0.25, leaves);
  REQUIRE(leaves.size() == 64);
  std::vector<Box> want_in, want_undet, want_out;
  for (const auto& b : leaves) {
    const double lo0 = 2 * b[0].lo(), hi0 = 2 * b[0].hi(), lo1 = 2 * b[1].lo(), hi1 = 2 * b[1].hi();
    const bool meets = lo0 <= 1 && hi0 >= -1 && lo1 <= 1 && hi1 >= -1;
    const bool inside = lo0 >= -1 && hi0 <= 1 && lo1 >= -1 && hi1 <= 1;
    (inside ? want_in : meets ? want_undet : want_out).push_back(b);
  }
  std::vector<Box> got_in, got_out;
  for (const auto& [b, modes] : c.inside) {
    CHECK(modes == ModeSet::single(0));
    leaves_of(b, 0.25, got_in);
  }
  for (const auto& b : c.outside) leaves_of(b, 0.25, got_out);
  for (auto* v : {&want_in, &want_undet, &want_out, &got_in, &got_out}) std::sort(v->begin(), v->end(), box_less);
  CHECK(got_in == want_in);
  CHECK(c.undetermined == want_undet);
  CHECK(got_out == want_out);
  CHECK(want_in.size() == 16);
  CHECK(want_undet.size() == 20);
}

TEST_CASE("contraction and escape") {
  const Region omega = Region::full({kOmega});
  const SwitchedSystem half = single({"0.5*x1", "0.5*x2"});
  const SynthesisResult outer = outer_approx(half, omega, with_eps(0.1));
  CHECK(outer.region == omega);
  CHECK(outer.iterations == 1);
  const SynthesisResult inner = inner_approx(half, omega, with_eps(0.1));
  CHECK(inner.region == omega);
  CHECK(inner.iterations == 1);
  CHECK(inner.certified);
  REQUIRE(inner.cells.size() == 1);
  CHECK(inner.cells[0].modes == ModeSet::single(0));

  const SwitchedSystem away = single({"x1+10", "x2"});
  CHECK(outer_approx(away, omega, with_eps(0.1)).outcome() == Outcome::Empty);
  CHECK(inner_approx(away, omega, with_eps(0.1)).outcome() == Outcome::Empty);
}

TEST_CASE("rotation has no inner approximation") {
  const LoadedConfig cfg = bundled("rotation.json");
  for (double eps : {0.1, 0.01, 0.001}) {
    const SynthesisResult r = inner_approx(cfg.system, cfg.omega, with_eps(eps));
    CHECK(r.outcome() == Outcome::Empty);
    CHECK(r.cells.empty());
  }
}

TEST_CASE("outer approximations shrink with epsilon and contain the inner one") {
  const LoadedConfig cfg = bundled("lti.json");
  const SynthesisResult coarse = outer_approx(cfg.system, cfg.omega, with_eps(0.05));
  const SynthesisResult fine = outer_approx(cfg.system, cfg.omega, with_eps(0.01));
  const SynthesisResult inner = inner_approx(cfg.system, cfg.omega, with_eps(0.01));
  CHECK(coarse.region.contains_region(fine.region));
  CHECK_FALSE(fine.region == coarse.region);
  CHECK(fine.region.contains_region(inner.region));
  CHECK(inner.outcome() == Outcome::Nonempty);
  CHECK(inner.certified);
  CHECK(verify_invariance(cfg.system, inner, cfg.synthesis.strategy, cfg.synthesis.rounding) == 0);
  check_partition(coarse);
  check_partition(fine);
  check_partition(inner);
  for (const auto& c : inner.cells) CHECK_FALSE(c.undetermined);
}

TEST_CASE("sandwich property on single-mode benchmarks") {
  std::mt19937_64 rng(5);
  for (const char* name : {"lti.json", "example86.json"}) {
    const LoadedConfig cfg = bundled(name);
    const SynthesisResult inner = inner_approx(cfg.system, cfg.omega, with_eps(0.01));
    const SynthesisResult outer = outer_approx(cfg.system, cfg.omega, with_eps(0.01));
    const Box root = cfg.omega.roots().front();
    std::size_t violations = 0;
    for (int k = 0; k < 10000; ++k) {
      std::vector<double> x{std::uniform_real_distribution<double>(root[0].lo(), root[0].hi())(rng),
                            std::uniform_real_distribution<double>(root[1].lo(), root[1].hi())(rng)};
      if (inner.region.contains_point(x)) {
        violations += outer.region.contains_point(x) ? 0 : 1;
        violations += inner.region.contains_point(cfg.system.step(0, x)) ? 0 : 1;
      }
      if (!outer.region.contains_point(x)) {
        // A removed point leaves omega within as many steps as there were sweeps.
        bool left = false;
        for (std::size_t s = 0; s <= outer.iterations && !left; ++s) {
          left = !cfg.omega.contains_point(x);
          x = cfg.system.step(0, x);
        }
        violations += left ? 0 : 1;
      }
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("results do not depend on worklist order or worker count") {
  for (const char* name : {"lti.json", "poly4.json", "dcdc.json"}) {
    const LoadedConfig cfg = bundled(name);
    SynthesisConfig base = cfg.synthesis;
    base.epsilon = std::max(base.epsilon, 0.004);
    const SynthesisResult ref_in = inner_approx(cfg.system, cfg.omega, base);
    const SynthesisResult ref_out = outer_approx(cfg.system, cfg.omega, base);
    for (auto order : {WorklistOrder::Lifo, WorklistOrder::Fifo}) {
      for (unsigned workers : {1U, 3U, 8U}) {
        SynthesisConfig c = base;
        c.order = order;
        c.workers = workers;
        const SynthesisResult in = inner_approx(cfg.system, cfg.omega, c);
        const SynthesisResult out = outer_approx(cfg.system, cfg.omega, c);
        CHECK(in.region == ref_in.region);
        CHECK(cells_equal(in.cells, ref_in.cells));
        CHECK(in.iterations == ref_in.iterations);
        CHECK(out.region == ref_out.region);
        CHECK(cells_equal(out.cells, ref_out.cells));
      }
    }
  }
}

TEST_CASE("budgets") {
  const LoadedConfig cfg = bundled("lti.json");
  SynthesisConfig c = with_eps(0.01);
  c.max_iterations = 1;
  try {
    outer_approx(cfg.system, cfg.omega, c);
    FAIL("expected BudgetExceeded");
  } catch (const BudgetExceeded& e) {
    CHECK(e.code() == ErrorCode::IterationBudgetExceeded);
    CHECK(e.partial().iterations == 1);
    CHECK(cfg.omega.contains_region(e.partial().region));
  }
  c = with_eps(0.01);
  c.max_boxes = 100;
  CHECK_THROWS_AS(inner_approx(cfg.system, cfg.omega, c), BudgetExceeded);
  CHECK_THROWS_AS(cpre(cfg.system, cfg.omega, cfg.omega.leaves_in(), c), Error);
  CHECK_THROWS_AS(with_eps(0.0).validate(), Error);
  CHECK_THROWS_AS(with_eps(-1.0).validate(), Error);
}

TEST_CASE("margin probing") {
  const Region omega = Region::full({kOmega});
  const MarginProbe easy = margin_probe(single({"0.5*x1", "0.5*x2"}), omega, 0.5, 0.5, 0.01, SynthesisConfig{});
  REQUIRE(easy.epsilon);
  CHECK(*easy.epsilon == 0.5);
  CHECK(easy.tried == std::vector<double>{0.5});
  REQUIRE(easy.margin_probe);
  CHECK(*easy.margin_probe == doctest::Approx(0.25));

  const LoadedConfig rot = bundled("rotation.json");
  const MarginProbe none = margin_probe(rot.system, rot.omega, 0.064, 0.5, 1e-3, SynthesisConfig{});
  CHECK_FALSE(none.epsilon);
  CHECK_FALSE(none.result);
  CHECK(none.tried.size() == 7);
  CHECK(none.tried.back() == doctest::Approx(1e-3));

  const LoadedConfig lti = bundled("lti.json");
  const MarginProbe found = margin_probe(lti.system, lti.omega, 0.064, 0.5, 5e-4, SynthesisConfig{});
  REQUIRE(found.epsilon);
  CHECK(*found.epsilon >= 5e-4);
  CHECK(found.result->certified);
  CHECK_THROWS_AS(margin_probe(lti.system, lti.omega, 0.1, 1.5, 0.01, SynthesisConfig{}), Error);
}
