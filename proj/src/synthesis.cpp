#include "invkit/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <thread>

namespace invkit {

void SynthesisConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
  if (max_boxes < 1) throw Error(ErrorCode::InvalidArgument, "max_boxes must be at least 1");
}

namespace {

using Clock = std::chrono::steady_clock;

// A box awaiting classification together with its cached mode images; the
// images depend only on the box, so they survive from sweep to sweep.
struct Item {
  Box box;
  std::vector<Box> images;
};

struct Sweep {
  std::vector<std::pair<Item, ModeSet>> inside;
  std::vector<Item> undetermined;
  std::vector<Box> outside;
};

struct BoxBudget {
  std::atomic<std::size_t> used{0};
  std::size_t limit = 0;
};

class BoxBudgetExhausted : public std::exception {
 public:
  const char* what() const noexcept override { return "box budget exhausted"; }
};

void classify_shard(const SwitchedSystem& sys, const Region& y, std::vector<Item> items,
                    const SynthesisConfig& cfg, BoxBudget& budget, Sweep& out) {
  std::deque<Item> work(std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
  const std::size_t modes = sys.mode_count();
  while (!work.empty()) {
    Item item;
    if (cfg.order == WorklistOrder::Lifo) {
      item = std::move(work.back());
      work.pop_back();
    } else {
      item = std::move(work.front());
      work.pop_front();
    }
    if (budget.used.fetch_add(1, std::memory_order_relaxed) >= budget.limit) throw BoxBudgetExhausted();

    if (item.images.empty()) {
      item.images.reserve(modes);
      for (std::size_t p = 0; p < modes; ++p) item.images.push_back(include(sys, p, item.box, cfg.strategy, cfg.rounding));
    }
    bool meets = false;
    ModeSet inside;
    for (std::size_t p = 0; p < modes; ++p) {
      if (!y.intersects_box(item.images[p])) continue;
      meets = true;
      if (y.contains_box(item.images[p])) inside.insert(p);
    }
    if (!meets) {
      out.outside.push_back(std::move(item.box));
    } else if (!inside.empty()) {
      out.inside.emplace_back(std::move(item), inside);
    } else if (width(item.box) < cfg.epsilon) {
      out.undetermined.push_back(std::move(item));
    } else {
      auto [l, r] = bisect(item.box);
      work.push_back(Item{std::move(r), {}});
      work.push_back(Item{std::move(l), {}});
    }
  }
}

unsigned resolve_workers(unsigned w) {
  if (w != 0) return w;
  return std::max(1U, std::thread::hardware_concurrency());
}

// One CPre sweep. Shards are contiguous slices of the input; the merged lists
// are sorted canonically so the outcome does not depend on sharding or order.
Sweep run_sweep(const SwitchedSystem& sys, const Region& y, std::vector<Item> items, const SynthesisConfig& cfg,
                BoxBudget& budget) {
  const std::size_t workers = std::min<std::size_t>(resolve_workers(cfg.workers), std::max<std::size_t>(1, items.size() / 64));
  std::vector<Sweep> parts(std::max<std::size_t>(workers, 1));
  if (parts.size() == 1) {
    classify_shard(sys, y, std::move(items), cfg, budget, parts[0]);
  } else {
    std::vector<std::vector<Item>> shards(parts.size());
    const std::size_t per = (items.size() + parts.size() - 1) / parts.size();
    for (std::size_t i = 0; i < items.size(); ++i) shards[i / per].push_back(std::move(items[i]));
    std::vector<std::exception_ptr> errors(parts.size());
    {
      std::vector<std::jthread> threads;
      for (std::size_t s = 0; s < parts.size(); ++s) {
        threads.emplace_back([&, s] {
          try {
            classify_shard(sys, y, std::move(shards[s]), cfg, budget, parts[s]);
          } catch (...) {
            errors[s] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  Sweep merged = std::move(parts[0]);
  for (std::size_t s = 1; s < parts.size(); ++s) {
    std::move(parts[s].inside.begin(), parts[s].inside.end(), std::back_inserter(merged.inside));
    std::move(parts[s].undetermined.begin(), parts[s].undetermined.end(), std::back_inserter(merged.undetermined));
    std::move(parts[s].outside.begin(), parts[s].outside.end(), std::back_inserter(merged.outside));
  }
  std::sort(merged.inside.begin(), merged.inside.end(),
            [](const auto& a, const auto& b) { return box_less(a.first.box, b.first.box); });
  std::sort(merged.undetermined.begin(), merged.undetermined.end(),
            [](const Item& a, const Item& b) { return box_less(a.box, b.box); });
  std::sort(merged.outside.begin(), merged.outside.end(), box_less);
  return merged;
}

std::vector<Item> items_of(const Region& r) {
  std::vector<Item> items;
  for (auto& b : r.leaves_in()) items.push_back(Item{std::move(b), {}});
  return items;
}

void check_inputs(const SwitchedSystem& sys, const Region& omega, const SynthesisConfig& cfg) {
  cfg.validate();
  if (omega.roots().empty() || omega.is_empty()) throw Error(ErrorCode::InvalidArgument, "omega must be nonempty");
  if (omega.dim() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "omega dimension does not match the system");
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<PavingCell> inside_cells(const Sweep& s) {
  std::vector<PavingCell> cells;
  cells.reserve(s.inside.size());
  for (const auto& [item, modes] : s.inside) cells.push_back(PavingCell{item.box, modes, false});
  return cells;
}

}  // namespace

ClassifiedPaving cpre(const SwitchedSystem& sys, const Region& target_y, std::span<const Box> boxes_x,
                      const SynthesisConfig& cfg) {
  cfg.validate();
  if (target_y.dim() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "target dimension does not match the system");
  std::vector<Item> items;
  for (const auto& b : boxes_x) {
    if (b.dim() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "box dimension does not match the system");
    items.push_back(Item{b, {}});
  }
  BoxBudget budget;
  budget.limit = cfg.max_boxes;
  Sweep s;
  try {
    s = run_sweep(sys, target_y, std::move(items), cfg, budget);
  } catch (const BoxBudgetExhausted&) {
    throw Error(ErrorCode::IterationBudgetExceeded, "cpre exceeded the box budget of " + std::to_string(cfg.max_boxes));
  }
  ClassifiedPaving out;
  for (auto& [item, modes] : s.inside) out.inside.emplace_back(std::move(item.box), modes);
  for (auto& item : s.undetermined) out.undetermined.push_back(std::move(item.box));
  out.outside = std::move(s.outside);
  return out;
}

SynthesisResult outer_approx(const SwitchedSystem& sys, const Region& omega, const SynthesisConfig& cfg) {
  check_inputs(sys, omega, cfg);
  const auto t0 = Clock::now();
  SynthesisResult res;
  res.kind = ApproxKind::Outer;
  res.region = omega;
  BoxBudget budget;
  budget.limit = cfg.max_boxes;

  std::vector<Item> items = items_of(omega);
  for (;;) {
    if (res.iterations >= cfg.max_iterations) {
      res.boxes_processed = budget.used.load();
      res.wall_time = seconds_since(t0);
      throw BudgetExceeded("outer approximation reached " + std::to_string(cfg.max_iterations) + " sweeps", res);
    }
    Sweep s;
    try {
      s = run_sweep(sys, res.region, std::move(items), cfg, budget);
    } catch (const BoxBudgetExhausted&) {
      res.boxes_processed = cfg.max_boxes;
      res.wall_time = seconds_since(t0);
      throw BudgetExceeded("outer approximation exceeded the box budget of " + std::to_string(cfg.max_boxes), res);
    }
    ++res.iterations;

    std::vector<Box> kept;
    kept.reserve(s.inside.size() + s.undetermined.size());
    for (const auto& [item, modes] : s.inside) kept.push_back(item.box);
    for (const auto& item : s.undetermined) kept.push_back(item.box);

    if (s.outside.empty()) {
      res.cells = inside_cells(s);
      for (const auto& item : s.undetermined) res.cells.push_back(PavingCell{item.box, ModeSet{}, true});
      std::sort(res.cells.begin(), res.cells.end(), [](const auto& a, const auto& b) { return box_less(a.box, b.box); });
      res.region = Region::from_boxes(omega.roots(), kept);
      break;
    }
    res.region = Region::from_boxes(omega.roots(), kept);
    items.clear();
    items.reserve(kept.size());
    for (auto& [item, modes] : s.inside) items.push_back(std::move(item));
    for (auto& item : s.undetermined) items.push_back(std::move(item));
  }
  res.boxes_processed = budget.used.load();
  res.wall_time = seconds_since(t0);
  return res;
}

SynthesisResult inner_approx(const SwitchedSystem& sys, const Region& omega, const SynthesisConfig& cfg) {
  check_inputs(sys, omega, cfg);
  const auto t0 = Clock::now();
  SynthesisResult res;
  res.kind = ApproxKind::Inner;
  res.region = omega;
  BoxBudget budget;
  budget.limit = cfg.max_boxes;

  std::vector<Item> items = items_of(omega);
  for (;;) {
    if (res.iterations >= cfg.max_iterations) {
      res.boxes_processed = budget.used.load();
      res.wall_time = seconds_since(t0);
      throw BudgetExceeded("inner approximation reached " + std::to_string(cfg.max_iterations) + " sweeps", res);
    }
    Sweep s;
    try {
      s = run_sweep(sys, res.region, std::move(items), cfg, budget);
    } catch (const BoxBudgetExhausted&) {
      res.boxes_processed = cfg.max_boxes;
      res.wall_time = seconds_since(t0);
      throw BudgetExceeded("inner approximation exceeded the box budget of " + std::to_string(cfg.max_boxes), res);
    }
    ++res.iterations;

    std::vector<Box> kept;
    kept.reserve(s.inside.size());
    for (const auto& [item, modes] : s.inside) kept.push_back(item.box);
    Region next = Region::from_boxes(omega.roots(), kept);
    if (next == res.region) {
      res.cells = inside_cells(s);
      break;
    }
    res.region = std::move(next);
    items.clear();
    items.reserve(kept.size());
    for (auto& [item, modes] : s.inside) items.push_back(std::move(item));
  }
  res.boxes_processed = budget.used.load();

  const std::size_t failures = verify_invariance(sys, res, cfg.strategy, cfg.rounding);
  if (failures != 0) {
    throw Error(ErrorCode::CertificationFailure,
                std::to_string(failures) + " cells of the inner approximation have no mode mapping into it");
  }
  res.certified = true;
  res.wall_time = seconds_since(t0);
  return res;
}

std::size_t verify_invariance(const SwitchedSystem& sys, const SynthesisResult& result, InclusionStrategy strategy,
                              RoundingPolicy rounding) {
  std::size_t failures = 0;
  for (const auto& cell : result.cells) {
    bool ok = false;
    if (!cell.undetermined) {
      for (std::size_t p : cell.modes.to_vector()) {
        if (result.region.contains_box(include(sys, p, cell.box, strategy, rounding))) {
          ok = true;
          break;
        }
      }
    }
    failures += ok ? 0 : 1;
  }
  return failures;
}

MarginProbe margin_probe(const SwitchedSystem& sys, const Region& omega, double eps0, double shrink, double eps_min,
                         SynthesisConfig cfg) {
  if (!(eps_min > 0.0) || !(eps0 > eps_min)) throw Error(ErrorCode::InvalidArgument, "need eps0 > eps_min > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidArgument, "shrink must lie in (0, 1)");
  MarginProbe probe;
  for (double eps = eps0; eps >= eps_min; eps *= shrink) {
    cfg.epsilon = eps;
    probe.tried.push_back(eps);
    SynthesisResult r = inner_approx(sys, omega, cfg);
    if (r.outcome() == Outcome::Nonempty) {
      probe.epsilon = eps;
      bool smooth = true;
      for (std::size_t p = 0; p < sys.mode_count(); ++p) smooth = smooth && sys.differentiable(p);
      if (smooth) probe.margin_probe = estimate_rho1(sys, omega).rho1 * eps;
      probe.result = std::move(r);
      break;
    }
  }
  return probe;
}

}  // namespace invkit
