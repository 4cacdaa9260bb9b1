#include "invkit/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace invkit {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) fail(path, std::string("missing field '") + key + "'");
  return obj.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> strings(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(text(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ModeSpec parse_mode(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  ModeSpec m;
  m.name = text(field(j, "name", path), path + ".name");
  int forms = 0;
  if (j.contains("update")) {
    m.update = strings(j["update"], path + ".update");
    ++forms;
  }
  if (j.contains("linear_affine")) {
    const std::string p = path + ".linear_affine";
    const json& la = j["linear_affine"];
    if (!la.is_object()) fail(p, "expected an object");
    ModeSpec::LinearAffine spec;
    const json& a = field(la, "A", p);
    if (!a.is_array()) fail(p + ".A", "expected an array of rows");
    for (std::size_t i = 0; i < a.size(); ++i) spec.a.push_back(numbers(a[i], p + ".A[" + std::to_string(i) + "]"));
    spec.b = numbers(field(la, "b", p), p + ".b");
    spec.tau = number(field(la, "tau", p), p + ".tau");
    m.linear_affine = std::move(spec);
    ++forms;
  }
  if (j.contains("euler")) {
    const std::string p = path + ".euler";
    const json& eu = j["euler"];
    if (!eu.is_object()) fail(p, "expected an object");
    m.euler = ModeSpec::Euler{strings(field(eu, "field", p), p + ".field"), number(field(eu, "tau", p), p + ".tau")};
    ++forms;
  }
  if (forms != 1) fail(path, "exactly one of update, linear_affine or euler is required");
  return m;
}

std::vector<Expr> parse_exprs(const std::vector<std::string>& src, std::size_t n, const std::string& path) {
  std::vector<Expr> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    try {
      out.push_back(parse_expr(src[i], n));
    } catch (const ParseError& e) {
      fail(path + "[" + std::to_string(i) + "]",
           std::string(error_name(e.code())) + " at offset " + std::to_string(e.diagnostic().position) + ": " +
               e.diagnostic().message);
    }
  }
  return out;
}

Mode build_mode(const ModeSpec& m, std::size_t n, const std::string& path) {
  if (m.update) {
    if (m.update->size() != n) fail(path + ".update", "expected " + std::to_string(n) + " expressions");
    return Mode{m.name, parse_exprs(*m.update, n, path + ".update")};
  }
  if (m.linear_affine) {
    const auto& la = *m.linear_affine;
    const std::string p = path + ".linear_affine";
    if (la.a.size() != n) fail(p + ".A", "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (la.a[i].size() != n) fail(p + ".A[" + std::to_string(i) + "]", "expected " + std::to_string(n) + " entries");
      for (std::size_t k = 0; k < n; ++k) a(i, k) = la.a[i][k];
    }
    if (la.b.size() != n) fail(p + ".b", "expected " + std::to_string(n) + " entries");
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(la.b.data(), static_cast<Eigen::Index>(n));
    if (!(la.tau > 0.0)) fail(p + ".tau", "must be positive");
    return discretize_linear_affine(m.name, a, b, la.tau);
  }
  const auto& eu = *m.euler;
  const std::string p = path + ".euler";
  if (eu.field.size() != n) fail(p + ".field", "expected " + std::to_string(n) + " expressions");
  if (!(eu.tau > 0.0)) fail(p + ".tau", "must be positive");
  return discretize_euler(m.name, parse_exprs(eu.field, n, p + ".field"), eu.tau);
}

}  // namespace

InclusionStrategy parse_strategy(const std::string& s) {
  if (s == "natural") return InclusionStrategy::Natural;
  if (s == "meanvalue") return InclusionStrategy::MeanValue;
  throw Error(ErrorCode::ConfigError, "strategy: expected natural or meanvalue, got '" + s + "'");
}

RoundingPolicy parse_rounding(const std::string& s) {
  if (s == "outward") return RoundingPolicy::Outward;
  if (s == "none") return RoundingPolicy::None;
  throw Error(ErrorCode::ConfigError, "rounding: expected outward or none, got '" + s + "'");
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "inertial") return PolicyKind::Inertial;
  if (s == "first") return PolicyKind::First;
  if (s == "random") return PolicyKind::Random;
  throw Error(ErrorCode::ConfigError, "policy: expected inertial, first or random, got '" + s + "'");
}

std::string strategy_name(InclusionStrategy s) { return s == InclusionStrategy::Natural ? "natural" : "meanvalue"; }
std::string rounding_name(RoundingPolicy r) { return r == RoundingPolicy::Outward ? "outward" : "none"; }

SystemConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("$", "expected an object");
  SystemConfig cfg;
  cfg.name = text(field(doc, "name", "$"), "name");
  cfg.dimension = count(field(doc, "dimension", "$"), "dimension");
  if (cfg.dimension == 0) fail("dimension", "must be positive");
  const json& modes = field(doc, "modes", "$");
  if (!modes.is_array() || modes.empty()) fail("modes", "expected a nonempty array");
  for (std::size_t i = 0; i < modes.size(); ++i) cfg.modes.push_back(parse_mode(modes[i], "modes[" + std::to_string(i) + "]"));
  const json& omega = field(doc, "omega", "$");
  if (!omega.is_array() || omega.empty()) fail("omega", "expected a nonempty array of boxes");
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const std::string p = "omega[" + std::to_string(i) + "]";
    auto box = numbers(omega[i], p);
    if (box.size() != 2 * cfg.dimension) fail(p, "expected " + std::to_string(2 * cfg.dimension) + " bounds");
    cfg.omega.push_back(std::move(box));
  }
  if (doc.contains("epsilon")) cfg.epsilon = number(doc["epsilon"], "epsilon");
  if (doc.contains("strategy")) cfg.strategy = text(doc["strategy"], "strategy");
  if (doc.contains("rounding")) cfg.rounding = text(doc["rounding"], "rounding");
  if (doc.contains("policy")) cfg.policy = text(doc["policy"], "policy");
  if (doc.contains("seed")) cfg.seed = count(doc["seed"], "seed");
  if (doc.contains("initial_mode")) cfg.initial_mode = count(doc["initial_mode"], "initial_mode");
  if (doc.contains("simulation")) {
    const json& sim = doc["simulation"];
    if (!sim.is_object()) fail("simulation", "expected an object");
    cfg.simulation = SimulationSpec{numbers(field(sim, "x0", "simulation"), "simulation.x0"),
                                    count(field(sim, "steps", "simulation"), "simulation.steps")};
  }
  return cfg;
}

std::string config_to_json(const SystemConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["name"] = cfg.name;
  doc["dimension"] = cfg.dimension;
  auto modes = nlohmann::ordered_json::array();
  for (const auto& m : cfg.modes) {
    nlohmann::ordered_json mj;
    mj["name"] = m.name;
    if (m.update) mj["update"] = *m.update;
    if (m.linear_affine) mj["linear_affine"] = {{"A", m.linear_affine->a}, {"b", m.linear_affine->b}, {"tau", m.linear_affine->tau}};
    if (m.euler) mj["euler"] = {{"field", m.euler->field}, {"tau", m.euler->tau}};
    modes.push_back(std::move(mj));
  }
  doc["modes"] = std::move(modes);
  doc["omega"] = cfg.omega;
  doc["epsilon"] = cfg.epsilon;
  doc["strategy"] = cfg.strategy;
  doc["rounding"] = cfg.rounding;
  doc["policy"] = cfg.policy;
  doc["seed"] = cfg.seed;
  doc["initial_mode"] = cfg.initial_mode;
  if (cfg.simulation) doc["simulation"] = {{"x0", cfg.simulation->x0}, {"steps", cfg.simulation->steps}};
  return doc.dump(2) + "\n";
}

LoadedConfig build_config(const SystemConfig& cfg) {
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
    modes.push_back(build_mode(cfg.modes[i], cfg.dimension, "modes[" + std::to_string(i) + "]"));
  }
  std::optional<SwitchedSystem> sys;
  try {
    sys.emplace(cfg.dimension, std::move(modes));
  } catch (const Error& e) {
    fail("modes", e.what());
  }
  std::vector<Box> roots;
  for (std::size_t i = 0; i < cfg.omega.size(); ++i) {
    try {
      roots.push_back(Box::from_bounds(cfg.omega[i]));
    } catch (const Error& e) {
      fail("omega[" + std::to_string(i) + "]", e.what());
    }
  }
  std::optional<Region> omega;
  try {
    omega = Region::full(std::move(roots));
  } catch (const Error& e) {
    fail("omega", e.what());
  }
  SynthesisConfig synth;
  synth.epsilon = cfg.epsilon;
  if (!(cfg.epsilon > 0.0)) fail("epsilon", "must be positive");
  try {
    synth.strategy = parse_strategy(cfg.strategy);
    synth.rounding = parse_rounding(cfg.rounding);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  SwitchPolicy policy;
  policy.kind = parse_policy(cfg.policy);
  policy.seed = cfg.seed;
  if (cfg.initial_mode >= sys->mode_count()) fail("initial_mode", "exceeds the number of modes");
  policy.initial_mode = cfg.initial_mode;
  if (cfg.simulation && cfg.simulation->x0.size() != cfg.dimension) {
    fail("simulation.x0", "expected " + std::to_string(cfg.dimension) + " coordinates");
  }
  return LoadedConfig{cfg, std::move(*sys), std::move(*omega), synth, policy};
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return build_config(parse_config(ss.str()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, path.filename().string() + ": " + e.what());
  }
}

}  // namespace invkit
