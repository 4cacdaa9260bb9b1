#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "invkit/controller.hpp"
#include "invkit/paving.hpp"
#include "invkit/synthesis.hpp"
#include "invkit/system.hpp"

namespace invkit {

/// One mode entry of a system file; exactly one dynamics form is set.
struct ModeSpec {
  struct LinearAffine {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    double tau = 0.0;
    friend bool operator==(const LinearAffine&, const LinearAffine&) = default;
  };
  struct Euler {
    std::vector<std::string> field;
    double tau = 0.0;
    friend bool operator==(const Euler&, const Euler&) = default;
  };

  std::string name;
  std::optional<std::vector<std::string>> update;
  std::optional<LinearAffine> linear_affine;
  std::optional<Euler> euler;

  friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

struct SimulationSpec {
  std::vector<double> x0;
  std::size_t steps = 0;
  friend bool operator==(const SimulationSpec&, const SimulationSpec&) = default;
};

/// Text-level system definition as read from a JSON file.
struct SystemConfig {
  std::string name;
  std::size_t dimension = 0;
  std::vector<ModeSpec> modes;
  std::vector<std::vector<double>> omega;  // flat lo1,hi1,...,lon,hin per root box
  double epsilon = 0.01;
  std::string strategy = "natural";
  std::string rounding = "outward";
  std::string policy = "inertial";
  std::uint64_t seed = 0;
  std::size_t initial_mode = 0;
  std::optional<SimulationSpec> simulation;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// Validated objects ready for synthesis.
struct LoadedConfig {
  SystemConfig spec;
  SwitchedSystem system;
  Region omega;
  SynthesisConfig synthesis;
  SwitchPolicy policy;
};

/// Parses and validates; every failure is a ConfigError naming the field.
SystemConfig parse_config(const std::string& json_text);
std::string config_to_json(const SystemConfig& cfg);
/// Builds the system (discretising linear-affine and Euler modes) and the
/// synthesis settings.
LoadedConfig build_config(const SystemConfig& cfg);
LoadedConfig load_config(const std::filesystem::path& path);

InclusionStrategy parse_strategy(const std::string& s);
RoundingPolicy parse_rounding(const std::string& s);
PolicyKind parse_policy(const std::string& s);
std::string strategy_name(InclusionStrategy s);
std::string rounding_name(RoundingPolicy r);

}  // namespace invkit
