#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "invkit/paving.hpp"
#include "invkit/system.hpp"

namespace invkit {

enum class WorklistOrder { Lifo, Fifo };

struct SynthesisConfig {
  double epsilon = 0.01;  // boxes narrower than this are not bisected
  InclusionStrategy strategy = InclusionStrategy::Natural;
  RoundingPolicy rounding = RoundingPolicy::Outward;
  std::size_t max_iterations = 1'000'000;  // sweeps
  std::size_t max_boxes = 2'000'000'000;   // boxes classified over a whole run
  unsigned workers = 1;                    // 0 picks the hardware concurrency
  WorklistOrder order = WorklistOrder::Lifo;

  void validate() const;
};

enum class ApproxKind { Outer, Inner };
enum class Outcome { Nonempty, Empty };

struct SynthesisResult {
  ApproxKind kind = ApproxKind::Outer;
  Region region;
  /// Canonically ordered cells covering the region. Inner results hold only
  /// IN cells; outer results also hold the undetermined boundary cells.
  std::vector<PavingCell> cells;
  std::size_t iterations = 0;
  std::size_t boxes_processed = 0;
  double wall_time = 0.0;  // seconds
  bool certified = false;

  Outcome outcome() const noexcept { return region.is_empty() ? Outcome::Empty : Outcome::Nonempty; }
};

/// Thrown when a run hits max_iterations or max_boxes; carries the state
/// reached so far.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, SynthesisResult partial)
      : Error(ErrorCode::IterationBudgetExceeded, what), partial_(std::move(partial)) {}
  const SynthesisResult& partial() const noexcept { return partial_; }

 private:
  SynthesisResult partial_;
};

/// Classifies each box of boxes_x (subdividing down to epsilon) against the
/// target region. An inside box records every mode whose image lies in the
/// target. Lists come back in canonical box order.
ClassifiedPaving cpre(const SwitchedSystem& sys, const Region& target_y, std::span<const Box> boxes_x,
                      const SynthesisConfig& cfg);

/// Outer approximation of the maximal controlled invariant subset of omega.
SynthesisResult outer_approx(const SwitchedSystem& sys, const Region& omega, const SynthesisConfig& cfg);

/// Certified inner approximation. Throws CertificationFailure if the
/// re-verification pass finds a cell with no mode mapping into the result.
SynthesisResult inner_approx(const SwitchedSystem& sys, const Region& omega, const SynthesisConfig& cfg);

/// Number of IN cells for which no recorded mode maps the cell into the
/// result region.
std::size_t verify_invariance(const SwitchedSystem& sys, const SynthesisResult& result, InclusionStrategy strategy,
                              RoundingPolicy rounding);

struct MarginProbe {
  std::optional<double> epsilon;
  std::optional<SynthesisResult> result;
  std::vector<double> tried;
  /// rho1 * epsilon for the successful run, when the system is differentiable.
  std::optional<double> margin_probe;
};

/// Runs inner_approx at eps0, eps0*shrink, ... until a nonempty result or
/// the next epsilon would fall below eps_min.
MarginProbe margin_probe(const SwitchedSystem& sys, const Region& omega, double eps0, double shrink, double eps_min,
                         SynthesisConfig cfg);

}  // namespace invkit
