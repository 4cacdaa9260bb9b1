// Command-line driver: synthesis runs, probing, simulation and exports.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "invkit/config.hpp"
#include "invkit/controller.hpp"
#include "invkit/synthesis.hpp"

namespace fs = std::filesystem;
using namespace invkit;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<double> epsilon;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  // margin
  double eps0 = 0.064;
  double shrink = 0.5;
  double eps_min = 5e-4;
  // simulate / export
  std::string controller;
  std::optional<std::string> x0;
  std::optional<std::size_t> steps;
  // bench
  std::string configs_dir = "configs";
};

unsigned default_workers() {
  if (const char* env = std::getenv("INVKIT_WORKERS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("INVKIT_WORKERS is not a number: ") + env);
    }
  }
  return 1;
}

LoadedConfig load(const Options& o) {
  if (o.config.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  LoadedConfig cfg = load_config(o.config);
  if (o.epsilon) {
    if (!(*o.epsilon > 0.0)) throw Error(ErrorCode::ConfigError, "--epsilon must be positive");
    cfg.synthesis.epsilon = *o.epsilon;
  }
  cfg.synthesis.workers = o.workers ? *o.workers : default_workers();
  if (o.seed) cfg.policy.seed = *o.seed;
  if (o.policy) cfg.policy.kind = parse_policy(*o.policy);
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

std::string outcome_name(const SynthesisResult& r) { return r.outcome() == Outcome::Nonempty ? "NONEMPTY" : "EMPTY"; }

nlohmann::ordered_json run_metadata(const std::string& command, const LoadedConfig& cfg, const SynthesisResult& r) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["system"] = cfg.spec.name;
  j["epsilon"] = cfg.synthesis.epsilon;
  j["strategy"] = strategy_name(cfg.synthesis.strategy);
  j["rounding"] = rounding_name(cfg.synthesis.rounding);
  j["outcome"] = outcome_name(r);
  j["iterations"] = r.iterations;
  j["boxes_processed"] = r.boxes_processed;
  j["cells"] = r.cells.size();
  j["volume_omega"] = cfg.omega.volume();
  j["volume_result"] = r.region.volume();
  j["certified"] = r.certified;
  j["wall_time"] = r.wall_time;
  return j;
}

void write_paving(const fs::path& dir, const LoadedConfig& cfg, const SynthesisResult& r) {
  const auto names = cfg.system.mode_names();
  std::ostringstream csv;
  write_paving_csv(csv, r.cells, names);
  write_file(dir / "paving.csv", csv.str());
  write_file(dir / "paving.json", paving_to_json(r.cells, names));
}

void summary(const std::string& command, const LoadedConfig& cfg, const SynthesisResult& r) {
  std::cout << command << ' ' << cfg.spec.name << ": " << outcome_name(r) << "  eps=" << cfg.synthesis.epsilon
            << "  volume_ratio=" << std::setprecision(6) << r.region.volume() / cfg.omega.volume()
            << "  cells=" << r.cells.size() << "  iterations=" << r.iterations << "  wall=" << std::setprecision(3)
            << r.wall_time << "s\n";
}

int cmd_synthesis(const Options& o, bool inner) {
  const LoadedConfig cfg = load(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  const SynthesisResult r = inner ? inner_approx(cfg.system, cfg.omega, cfg.synthesis)
                                  : outer_approx(cfg.system, cfg.omega, cfg.synthesis);
  const std::string command = inner ? "inner" : "outer";
  write_paving(dir, cfg, r);
  write_file(dir / "run.json", run_metadata(command, cfg, r).dump(2) + "\n");
  if (inner && r.outcome() == Outcome::Nonempty) {
    write_file(dir / "controller.json", controller_to_json(cfg.system, extract(r, cfg.omega)));
  }
  summary(command, cfg, r);
  return 0;
}

int cmd_margin(const Options& o) {
  LoadedConfig cfg = load(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  const MarginProbe probe = margin_probe(cfg.system, cfg.omega, o.eps0, o.shrink, o.eps_min, cfg.synthesis);
  nlohmann::ordered_json j;
  j["command"] = "margin";
  j["system"] = cfg.spec.name;
  j["tried"] = probe.tried;
  j["epsilon_found"] = probe.epsilon ? nlohmann::ordered_json(*probe.epsilon) : nlohmann::ordered_json(nullptr);
  j["margin_probe"] = probe.margin_probe ? nlohmann::ordered_json(*probe.margin_probe) : nlohmann::ordered_json(nullptr);
  if (probe.result) {
    cfg.synthesis.epsilon = *probe.epsilon;
    j["run"] = run_metadata("inner", cfg, *probe.result);
    write_paving(dir, cfg, *probe.result);
    write_file(dir / "controller.json", controller_to_json(cfg.system, extract(*probe.result, cfg.omega)));
    summary("margin", cfg, *probe.result);
  } else {
    std::cout << "margin " << cfg.spec.name << ": EMPTY for every epsilon down to " << o.eps_min << '\n';
  }
  write_file(dir / "run.json", j.dump(2) + "\n");
  return 0;
}

Controller read_controller(const Options& o, const LoadedConfig& cfg) {
  if (o.controller.empty()) throw Error(ErrorCode::ConfigError, "--controller is required");
  std::ifstream in(o.controller);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + o.controller);
  std::stringstream ss;
  ss << in.rdbuf();
  return controller_from_json(cfg.system, ss.str());
}

int cmd_simulate(const Options& o) {
  const LoadedConfig cfg = load(o);
  const Controller ctl = read_controller(o, cfg);
  std::vector<double> x0;
  std::size_t steps = 0;
  if (cfg.spec.simulation) {
    x0 = cfg.spec.simulation->x0;
    steps = cfg.spec.simulation->steps;
  }
  if (o.x0) {
    x0.clear();
    std::stringstream ss(*o.x0);
    std::string tok;
    while (std::getline(ss, tok, ',')) x0.push_back(std::stod(tok));
  }
  if (o.steps) steps = *o.steps;
  if (x0.size() != cfg.system.dim()) throw Error(ErrorCode::ConfigError, "initial state needs " + std::to_string(cfg.system.dim()) + " coordinates");
  const SimTrace trace = simulate(cfg.system, ctl, x0, steps, cfg.policy);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  write_trace_csv(csv, cfg.system, trace);
  write_file(dir / "trace.csv", csv.str());
  std::size_t exits = 0;
  for (bool b : trace.in_omega) exits += b ? 0 : 1;
  std::cout << "simulate " << cfg.spec.name << ": steps=" << trace.modes.size() << "  exits=" << exits << '\n';
  if (trace.breach_step) {
    throw Error(ErrorCode::ConformanceBreach,
                "admissible mode set emptied at step " + std::to_string(*trace.breach_step));
  }
  return 0;
}

int cmd_export(const Options& o) {
  const LoadedConfig cfg = load(o);
  const Controller ctl = read_controller(o, cfg);
  const auto transitions = export_abstraction(cfg.system, ctl, cfg.synthesis.strategy, cfg.synthesis.rounding);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  write_abstraction_csv(csv, cfg.system, transitions);
  write_file(dir / "abstraction.csv", csv.str());
  std::cout << "export-abstraction " << cfg.spec.name << ": cells=" << ctl.cells().size()
            << "  transitions=" << transitions.size() << '\n';
  return 0;
}

int cmd_bench(const Options& o) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.configs_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::cout << std::left << std::setw(16) << "config" << std::setw(10) << "epsilon" << std::setw(10) << "inner"
            << std::setw(10) << "AI/Omega" << std::setw(10) << "AO/Omega" << std::setw(10) << "cells" << "time[s]\n";
  for (const auto& f : files) {
    Options one = o;
    one.config = f.string();
    const LoadedConfig cfg = load(one);
    const auto t0 = std::chrono::steady_clock::now();
    const SynthesisResult in = inner_approx(cfg.system, cfg.omega, cfg.synthesis);
    const SynthesisResult out = outer_approx(cfg.system, cfg.omega, cfg.synthesis);
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double vo = cfg.omega.volume();
    std::cout << std::setw(16) << cfg.spec.name << std::setw(10) << cfg.synthesis.epsilon << std::setw(10)
              << outcome_name(in) << std::setw(10) << std::setprecision(4) << in.region.volume() / vo << std::setw(10)
              << out.region.volume() / vo << std::setw(10) << in.cells.size() << std::setprecision(3) << t << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled invariant sets of switched systems by interval paving"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "System definition (JSON)")->required();
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--epsilon", o.epsilon, "Override the configured epsilon");
    sub->add_option("--workers", o.workers, "Worker threads (default: INVKIT_WORKERS or 1)");
    sub->add_option("--seed", o.seed, "Seed for the random switching policy");
    sub->add_option("--policy", o.policy, "Switching policy")->check(CLI::IsMember({"inertial", "first", "random"}));
  };

  auto* outer = app.add_subcommand("outer", "Outer approximation");
  common(outer);
  auto* inner = app.add_subcommand("inner", "Certified inner approximation and controller");
  common(inner);
  auto* margin = app.add_subcommand("margin", "Shrink epsilon until the inner approximation is nonempty");
  common(margin);
  margin->add_option("--eps0", o.eps0, "Initial epsilon");
  margin->add_option("--shrink", o.shrink, "Factor applied to epsilon after an empty result");
  margin->add_option("--eps-min", o.eps_min, "Smallest epsilon tried");
  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation under a controller");
  common(sim);
  sim->add_option("--controller", o.controller, "controller.json from a prior inner run")->required();
  sim->add_option("--x0", o.x0, "Initial state, comma separated");
  sim->add_option("--steps", o.steps, "Number of steps");
  auto* exp = app.add_subcommand("export-abstraction", "Transition system of a controller");
  common(exp);
  exp->add_option("--controller", o.controller, "controller.json from a prior inner run")->required();
  auto* bench = app.add_subcommand("bench", "Run every bundled configuration");
  bench->add_option("--configs", o.configs_dir, "Directory of configurations");
  bench->add_option("--workers", o.workers, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (outer->parsed()) return cmd_synthesis(o, false);
    if (inner->parsed()) return cmd_synthesis(o, true);
    if (margin->parsed()) return cmd_margin(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (exp->parsed()) return cmd_export(o);
    if (bench->parsed()) return cmd_bench(o);
  } catch (const Error& e) {
    std::cerr << "error: " << error_name(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
