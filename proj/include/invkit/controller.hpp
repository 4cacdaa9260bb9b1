#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invkit/paving.hpp"
#include "invkit/synthesis.hpp"
#include "invkit/system.hpp"

namespace invkit {

struct ControllerCell {
  Box box;
  ModeSet modes;
};

/// Partition-based switching controller: the cells of a certified inner
/// approximation with their admissible modes, plus a bisection-tree index
/// for point and box lookups.
class Controller {
 public:
  /// Cells must be bisection-aligned with omega's roots and interior-disjoint,
  /// with nonempty mode sets.
  Controller(Region omega, std::vector<ControllerCell> cells);

  const Region& omega() const noexcept { return omega_; }
  const Region& domain() const noexcept { return domain_; }
  const std::vector<ControllerCell>& cells() const noexcept { return cells_; }

  /// Union of the mode sets of every cell containing x (closed cells).
  ModeSet admissible(std::span<const double> x) const;
  /// Indices of cells containing x, ascending.
  std::vector<std::size_t> cells_containing(std::span<const double> x) const;
  /// Indices of cells meeting the closed box q, ascending.
  std::vector<std::size_t> cells_intersecting(const Box& q) const;

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t dim = 0;
    std::int64_t cell = -1;
    double mid = 0.0;
  };
  void index_cell(std::size_t idx);

  Region omega_;
  Region domain_;
  std::vector<ControllerCell> cells_;
  std::vector<std::vector<Node>> trees_;
};

/// Controller from a certified, nonempty inner approximation. Outer or empty
/// results throw EmptyResult.
Controller extract(const SynthesisResult& result, const Region& omega);

enum class PolicyKind { Inertial, First, Random };

struct SwitchPolicy {
  PolicyKind kind = PolicyKind::Inertial;
  std::uint64_t seed = 0;       // Random only
  std::size_t initial_mode = 0; // Inertial: preferred mode at step 0
};

struct SimTrace {
  std::vector<std::vector<double>> states;
  std::vector<std::size_t> modes;  // one shorter than states
  std::vector<bool> in_omega;      // per state
  /// Set when the admissible set emptied; the trace stops at that state.
  std::optional<std::size_t> breach_step;
};

/// Closed-loop run choosing p_k from admissible(x_k) per the policy. Throws
/// InfeasibleStart when x0 has no admissible mode.
SimTrace simulate(const SwitchedSystem& sys, const Controller& ctl, std::span<const double> x0, std::size_t steps,
                  const SwitchPolicy& policy);

struct Transition {
  std::size_t from = 0;
  std::size_t mode = 0;
  std::size_t to = 0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// (i, p, j) for every cell i, admissible p and cell j meeting [f_p](cell i).
std::vector<Transition> export_abstraction(const SwitchedSystem& sys, const Controller& ctl,
                                           InclusionStrategy strategy,
                                           RoundingPolicy rounding = RoundingPolicy::Outward);

/// Stable hash of the mode names and printed update expressions.
std::string system_hash(const SwitchedSystem& sys);

std::string controller_to_json(const SwitchedSystem& sys, const Controller& ctl);
/// Throws IoError for malformed files and ConfigError when the file was made
/// for a different system.
Controller controller_from_json(const SwitchedSystem& sys, const std::string& text);

void write_trace_csv(std::ostream& os, const SwitchedSystem& sys, const SimTrace& trace);
void write_abstraction_csv(std::ostream& os, const SwitchedSystem& sys, std::span<const Transition> transitions);

}  // namespace invkit
