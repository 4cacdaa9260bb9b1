#include <doctest.h>

#include <random>
#include <sstream>

#include "invkit/config.hpp"
#include "invkit/controller.hpp"

using namespace invkit;

namespace {

const Box kOmega{Interval(-1, 1), Interval(-1, 1)};

SwitchedSystem single(std::vector<std::string> update) {
  std::vector<Expr> exprs;
  for (const auto& s : update) exprs.push_back(parse_expr(s, update.size()));
  return SwitchedSystem(update.size(), {Mode{"m", std::move(exprs)}});
}

struct Bench {
  LoadedConfig cfg;
  SynthesisResult result;
  Controller ctl;
};

Bench bench(const char* name) {
  LoadedConfig cfg = load_config(std::string(INVKIT_CONFIG_DIR) + "/" + name);
  SynthesisResult r = inner_approx(cfg.system, cfg.omega, cfg.synthesis);
  Controller ctl = extract(r, cfg.omega);
  return Bench{std::move(cfg), std::move(r), std::move(ctl)};
}

std::vector<double> point_in(std::mt19937_64& rng, const Box& b) {
  std::vector<double> x;
  for (const auto& iv : b.intervals()) x.push_back(std::uniform_real_distribution<double>(iv.lo(), iv.hi())(rng));
  return x;
}

bool closed_contains(const Box& b, std::span<const double> x) {
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (!(b[i].lo() <= x[i] && x[i] <= b[i].hi())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("extraction") {
  const Region omega = Region::full({kOmega});
  const SwitchedSystem half = single({"0.5*x1", "0.5*x2"});
  SynthesisConfig cfg;
  cfg.epsilon = 0.1;
  const Controller ctl = extract(inner_approx(half, omega, cfg), omega);
  REQUIRE(ctl.cells().size() == 1);
  CHECK(ctl.cells()[0].box == kOmega);
  CHECK(ctl.cells()[0].modes == ModeSet::single(0));
  CHECK(ctl.domain() == omega);

  try {
    extract(outer_approx(half, omega, cfg), omega);
    FAIL("expected EmptyResult");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyResult);
  }
  CHECK_THROWS_AS(extract(inner_approx(single({"x1+10", "x2"}), omega, cfg), omega), Error);

  CHECK_THROWS_AS(Controller(omega, {ControllerCell{Box{Interval(-0.9, 1), Interval(-1, 1)}, ModeSet::single(0)}}), Error);
  CHECK_THROWS_AS(Controller(omega, {ControllerCell{kOmega, ModeSet{}}}), Error);
  CHECK_THROWS_AS(Controller(omega, {ControllerCell{kOmega, ModeSet::single(0)}, ControllerCell{kOmega, ModeSet::single(0)}}),
                  Error);
}

TEST_CASE("admissible sets agree with a linear scan") {
  const Bench b = bench("poly4.json");
  std::mt19937_64 rng(8);
  const Box root = b.cfg.omega.roots().front();
  std::size_t mismatches = 0;
  for (int k = 0; k < 5000; ++k) {
    std::vector<double> x = point_in(rng, root);
    if (k % 2 == 1) {
      // Snap to a corner of a random cell to exercise shared faces.
      const auto& cell = b.ctl.cells()[std::uniform_int_distribution<std::size_t>(0, b.ctl.cells().size() - 1)(rng)];
      x = {k % 4 == 1 ? cell.box[0].lo() : cell.box[0].hi(), cell.box[1].hi()};
    }
    ModeSet want;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < b.ctl.cells().size(); ++i) {
      if (closed_contains(b.ctl.cells()[i].box, x)) {
        want |= b.ctl.cells()[i].modes;
        idx.push_back(i);
      }
    }
    mismatches += b.ctl.admissible(x) == want ? 0 : 1;
    mismatches += b.ctl.cells_containing(x) == idx ? 0 : 1;
  }
  CHECK(mismatches == 0);
  const double far[] = {10.0, 10.0};
  CHECK(b.ctl.admissible(far).empty());
  const double x0[] = {0.208, -1.06};
  CHECK_FALSE(b.ctl.admissible(x0).empty());
}

TEST_CASE("benchmark simulations stay in omega") {
  for (const char* name : {"dcdc.json", "poly4.json", "pendulum_o1.json", "pendulum_o2.json"}) {
    const Bench b = bench(name);
    REQUIRE(b.cfg.spec.simulation);
    const auto& sim = *b.cfg.spec.simulation;
    const SimTrace t = simulate(b.cfg.system, b.ctl, sim.x0, sim.steps, b.cfg.policy);
    INFO(name);
    CHECK_FALSE(t.breach_step);
    CHECK(t.states.size() == sim.steps + 1);
    CHECK(t.modes.size() == sim.steps);
    CHECK(std::all_of(t.in_omega.begin(), t.in_omega.end(), [](bool v) { return v; }));
  }
}

TEST_CASE("switching policies") {
  const Bench b = bench("poly4.json");
  const auto& x0 = b.cfg.spec.simulation->x0;
  for (auto kind : {PolicyKind::Inertial, PolicyKind::First, PolicyKind::Random}) {
    SwitchPolicy policy{kind, 7, 0};
    const SimTrace t = simulate(b.cfg.system, b.ctl, x0, 300, policy);
    REQUIRE_FALSE(t.breach_step);
    for (std::size_t k = 0; k < t.modes.size(); ++k) {
      const ModeSet adm = b.ctl.admissible(t.states[k]);
      CHECK(adm.contains(t.modes[k]));
      if (kind == PolicyKind::First) CHECK(t.modes[k] == adm.first());
      if (kind == PolicyKind::Inertial && k > 0 && adm.contains(t.modes[k - 1])) CHECK(t.modes[k] == t.modes[k - 1]);
      CHECK(t.states[k + 1] == b.cfg.system.step(t.modes[k], t.states[k]));
    }
    const SimTrace again = simulate(b.cfg.system, b.ctl, x0, 300, policy);
    CHECK(again.modes == t.modes);
  }
  const double outside[] = {5.0, 5.0};
  try {
    simulate(b.cfg.system, b.ctl, outside, 10, SwitchPolicy{});
    FAIL("expected InfeasibleStart");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleStart);
  }
}

TEST_CASE("random-policy conformance on every benchmark controller") {
  for (const char* name : {"lti.json", "example86.json", "dcdc.json", "poly4.json", "pendulum_o1.json", "pendulum_o2.json"}) {
    const Bench b = bench(name);
    std::mt19937_64 rng(1234);
    std::size_t exits = 0, breaches = 0;
    for (int start = 0; start < 100; ++start) {
      const auto& cell = b.ctl.cells()[std::uniform_int_distribution<std::size_t>(0, b.ctl.cells().size() - 1)(rng)];
      const std::vector<double> x0 = point_in(rng, cell.box);
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SimTrace t = simulate(b.cfg.system, b.ctl, x0, 1000, SwitchPolicy{PolicyKind::Random, seed, 0});
        breaches += t.breach_step ? 1 : 0;
        for (bool in : t.in_omega) exits += in ? 0 : 1;
      }
    }
    INFO(name);
    CHECK(exits == 0);
    CHECK(breaches == 0);
  }
}

TEST_CASE("abstraction export") {
  const Region omega = Region::full({kOmega});
  const SwitchedSystem half = single({"0.5*x1", "0.5*x2"});
  const Controller one(omega, {ControllerCell{kOmega, ModeSet::single(0)}});
  CHECK(export_abstraction(half, one, InclusionStrategy::Natural) == std::vector<Transition>{{0, 0, 0}});

  const Controller two(omega, {ControllerCell{Box{Interval(-1, 0), Interval(-1, 1)}, ModeSet::single(0)},
                               ControllerCell{Box{Interval(0, 1), Interval(-1, 1)}, ModeSet::single(0)}});
  const SwitchedSystem shift = single({"0.5*x1+0.25", "0.5*x2"});
  const auto tr = export_abstraction(shift, two, InclusionStrategy::Natural);
  CHECK(std::count_if(tr.begin(), tr.end(), [](const Transition& t) { return t.from == 0; }) == 2);
  CHECK(std::count_if(tr.begin(), tr.end(), [](const Transition& t) { return t.from == 1; }) == 1);

  // Every sampled successor lands in a cell named by a transition.
  const Bench b = bench("pendulum_o1.json");
  const auto transitions = export_abstraction(b.cfg.system, b.ctl, InclusionStrategy::Natural);
  std::mt19937_64 rng(3);
  std::size_t missing = 0;
  for (std::size_t i = 0; i < b.ctl.cells().size(); ++i) {
    for (std::size_t p : b.ctl.cells()[i].modes.to_vector()) {
      for (int s = 0; s < 20; ++s) {
        const auto y = b.cfg.system.step(p, point_in(rng, b.ctl.cells()[i].box));
        bool found = false;
        for (std::size_t j : b.ctl.cells_containing(y)) {
          found = found || std::find(transitions.begin(), transitions.end(), Transition{i, p, j}) != transitions.end();
        }
        missing += found ? 0 : 1;
      }
    }
  }
  CHECK(missing == 0);
  for (const auto& t : transitions) CHECK(b.ctl.cells()[t.from].modes.contains(t.mode));
}

TEST_CASE("controller files") {
  const Bench b = bench("dcdc.json");
  const std::string text = controller_to_json(b.cfg.system, b.ctl);
  const Controller back = controller_from_json(b.cfg.system, text);
  CHECK(back.domain() == b.ctl.domain());
  CHECK(back.omega() == b.ctl.omega());
  REQUIRE(back.cells().size() == b.ctl.cells().size());
  for (std::size_t i = 0; i < back.cells().size(); ++i) {
    CHECK(back.cells()[i].box == b.ctl.cells()[i].box);
    CHECK(back.cells()[i].modes == b.ctl.cells()[i].modes);
  }
  CHECK(controller_to_json(b.cfg.system, back) == text);

  const LoadedConfig other = load_config(std::string(INVKIT_CONFIG_DIR) + "/poly4.json");
  CHECK(system_hash(other.system) != system_hash(b.cfg.system));
  CHECK(system_hash(b.cfg.system).size() == 16);
  try {
    controller_from_json(other.system, text);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
  try {
    controller_from_json(b.cfg.system, "{not json");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("trace and abstraction CSV") {
  const SwitchedSystem half = single({"0.5*x1", "0.5*x2"});
  const Region omega = Region::full({kOmega});
  const Controller ctl(omega, {ControllerCell{kOmega, ModeSet::single(0)}});
  const double x0[] = {0.5, -1.0};
  const SimTrace t = simulate(half, ctl, x0, 2, SwitchPolicy{});
  std::ostringstream os;
  write_trace_csv(os, half, t);
  CHECK(os.str() == "k,x1,x2,mode,in_omega\n0,0.5,-1,m,true\n1,0.25,-0.5,m,true\n2,0.125,-0.25,,true\n");
  std::ostringstream ab;
  write_abstraction_csv(ab, half, export_abstraction(half, ctl, InclusionStrategy::Natural));
  CHECK(ab.str() == "i,mode,j\n0,m,0\n");
}
