#include "invkit/controller.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

namespace invkit {

Controller::Controller(Region omega, std::vector<ControllerCell> cells)
    : omega_(std::move(omega)), cells_(std::move(cells)) {
  std::vector<Box> boxes;
  boxes.reserve(cells_.size());
  for (const auto& c : cells_) {
    if (c.modes.empty()) throw Error(ErrorCode::InvalidArgument, "controller cell " + to_string(c.box) + " has no modes");
    boxes.push_back(c.box);
  }
  domain_ = Region::from_boxes(omega_.roots(), boxes);
  trees_.assign(omega_.roots().size(), std::vector<Node>(1));
  for (std::size_t i = 0; i < cells_.size(); ++i) index_cell(i);
}

// Unreduced bisection tree: every cell ends up as exactly one leaf.
void Controller::index_cell(std::size_t idx) {
  const Box& box = cells_[idx].box;
  const auto& roots = omega_.roots();
  std::size_t t = 0;
  while (t < roots.size() && !contains(roots[t], box)) ++t;
  if (t == roots.size()) throw Error(ErrorCode::MisalignedBox, "cell " + to_string(box) + " lies outside omega");
  auto& nodes = trees_[t];
  std::vector<Interval> cur(roots[t].intervals().begin(), roots[t].intervals().end());
  std::int32_t n = 0;
  for (;;) {
    if (Box(cur) == box) {
      if (nodes[n].cell >= 0 || nodes[n].left >= 0) {
        throw Error(ErrorCode::InvalidArgument, "controller cells overlap at " + to_string(box));
      }
      nodes[n].cell = static_cast<std::int64_t>(idx);
      return;
    }
    if (nodes[n].left < 0) {
      if (nodes[n].cell >= 0) throw Error(ErrorCode::InvalidArgument, "controller cells overlap at " + to_string(box));
      const Box nb(cur);
      const std::size_t d = widest_dim(nb);
      const auto l = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      nodes[n].left = l;
      nodes[n].right = l + 1;
      nodes[n].dim = static_cast<std::uint32_t>(d);
      nodes[n].mid = nb[d].mid();
    }
    const Node node = nodes[n];
    if (box[node.dim].hi() <= node.mid) {
      cur[node.dim] = Interval(cur[node.dim].lo(), node.mid);
      n = node.left;
    } else if (box[node.dim].lo() >= node.mid) {
      cur[node.dim] = Interval(node.mid, cur[node.dim].hi());
      n = node.right;
    } else {
      throw Error(ErrorCode::MisalignedBox, "cell " + to_string(box) + " is not aligned with omega");
    }
  }
}

std::vector<std::size_t> Controller::cells_containing(std::span<const double> x) const {
  std::vector<std::size_t> out;
  if (x.size() != omega_.dim()) return out;
  const auto& roots = omega_.roots();
  for (std::size_t t = 0; t < roots.size(); ++t) {
    if (!contains_point(roots[t], x)) continue;
    const auto& nodes = trees_[t];
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes[stack.back()];
      stack.pop_back();
      if (node.left < 0) {
        if (node.cell >= 0) out.push_back(static_cast<std::size_t>(node.cell));
        continue;
      }
      if (x[node.dim] <= node.mid) stack.push_back(node.left);
      if (x[node.dim] >= node.mid) stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> Controller::cells_intersecting(const Box& q) const {
  std::vector<std::size_t> out;
  if (q.dim() != omega_.dim()) return out;
  const auto& roots = omega_.roots();
  for (std::size_t t = 0; t < roots.size(); ++t) {
    if (!intersects(roots[t], q)) continue;
    const auto& nodes = trees_[t];
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes[stack.back()];
      stack.pop_back();
      if (node.left < 0) {
        if (node.cell >= 0) out.push_back(static_cast<std::size_t>(node.cell));
        continue;
      }
      if (q[node.dim].lo() <= node.mid) stack.push_back(node.left);
      if (q[node.dim].hi() >= node.mid) stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ModeSet Controller::admissible(std::span<const double> x) const {
  ModeSet s;
  for (std::size_t i : cells_containing(x)) s |= cells_[i].modes;
  return s;
}

Controller extract(const SynthesisResult& result, const Region& omega) {
  if (result.kind != ApproxKind::Inner || !result.certified) {
    throw Error(ErrorCode::EmptyResult, "only certified inner approximations yield controllers");
  }
  if (result.outcome() == Outcome::Empty) throw Error(ErrorCode::EmptyResult, "the inner approximation is empty");
  std::vector<ControllerCell> cells;
  cells.reserve(result.cells.size());
  for (const auto& c : result.cells) cells.push_back(ControllerCell{c.box, c.modes});
  return Controller(omega, std::move(cells));
}

SimTrace simulate(const SwitchedSystem& sys, const Controller& ctl, std::span<const double> x0, std::size_t steps,
                  const SwitchPolicy& policy) {
  if (x0.size() != sys.dim()) throw Error(ErrorCode::InvalidArgument, "initial state has the wrong dimension");
  if (ctl.admissible(x0).empty()) throw Error(ErrorCode::InfeasibleStart, "initial state lies outside the controller domain");
  SimTrace trace;
  std::mt19937_64 rng(policy.seed);
  std::vector<double> x(x0.begin(), x0.end());
  std::optional<std::size_t> prev;
  if (policy.kind == PolicyKind::Inertial) prev = policy.initial_mode;
  for (std::size_t k = 0;; ++k) {
    trace.states.push_back(x);
    trace.in_omega.push_back(ctl.omega().contains_point(x));
    if (k == steps) break;
    const ModeSet adm = ctl.admissible(x);
    if (adm.empty()) {
      trace.breach_step = k;
      break;
    }
    std::size_t p = adm.first();
    switch (policy.kind) {
      case PolicyKind::Inertial:
        if (prev && adm.contains(*prev)) p = *prev;
        break;
      case PolicyKind::First:
        break;
      case PolicyKind::Random: {
        const auto options = adm.to_vector();
        p = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
        break;
      }
    }
    trace.modes.push_back(p);
    prev = p;
    x = sys.step(p, x);
  }
  return trace;
}

std::vector<Transition> export_abstraction(const SwitchedSystem& sys, const Controller& ctl,
                                           InclusionStrategy strategy, RoundingPolicy rounding) {
  std::vector<Transition> out;
  const auto& cells = ctl.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t p : cells[i].modes.to_vector()) {
      const Box image = include(sys, p, cells[i].box, strategy, rounding);
      for (std::size_t j : ctl.cells_intersecting(image)) out.push_back(Transition{i, p, j});
    }
  }
  return out;
}

std::string system_hash(const SwitchedSystem& sys) {
  // FNV-1a over a canonical text rendering.
  std::string text = std::to_string(sys.dim());
  for (const auto& m : sys.modes()) {
    text += '\n' + m.name;
    for (const auto& e : m.update) text += ';' + to_string(e);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::ordered_json box_json(const Box& b) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& d : b.intervals()) {
    arr.push_back(d.lo());
    arr.push_back(d.hi());
  }
  return arr;
}

Box json_box(const nlohmann::json& j, std::size_t n) {
  if (!j.is_array() || j.size() != 2 * n) throw Error(ErrorCode::IoError, "box entry must hold 2n numbers");
  std::vector<double> bounds;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::IoError, "box entry must hold numbers");
    bounds.push_back(v.get<double>());
  }
  return Box::from_bounds(bounds);
}

}  // namespace

std::string controller_to_json(const SwitchedSystem& sys, const Controller& ctl) {
  const auto names = sys.mode_names();
  nlohmann::ordered_json doc;
  doc["system_hash"] = system_hash(sys);
  auto omega = nlohmann::ordered_json::array();
  for (const auto& b : ctl.omega().leaves_in()) omega.push_back(box_json(b));
  doc["omega"] = std::move(omega);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : ctl.cells()) {
    auto modes = nlohmann::ordered_json::array();
    for (std::size_t p : c.modes.to_vector()) modes.push_back(names[p]);
    cells.push_back({{"box", box_json(c.box)}, {"modes", std::move(modes)}});
  }
  doc["cells"] = std::move(cells);
  return doc.dump(1) + "\n";
}

Controller controller_from_json(const SwitchedSystem& sys, const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("controller file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("system_hash") || !doc.contains("omega") || !doc.contains("cells")) {
    throw Error(ErrorCode::IoError, "controller file needs system_hash, omega and cells");
  }
  if (doc["system_hash"] != system_hash(sys)) {
    throw Error(ErrorCode::ConfigError, "controller was synthesised for a different system");
  }
  const std::size_t n = sys.dim();
  std::vector<Box> omega;
  for (const auto& b : doc["omega"]) omega.push_back(json_box(b, n));
  const auto names = sys.mode_names();
  std::vector<ControllerCell> cells;
  for (const auto& c : doc["cells"]) {
    if (!c.contains("box") || !c.contains("modes")) throw Error(ErrorCode::IoError, "controller cell needs box and modes");
    ControllerCell cell{json_box(c["box"], n), {}};
    for (const auto& m : c["modes"]) {
      const auto it = std::find(names.begin(), names.end(), m.get<std::string>());
      if (it == names.end()) throw Error(ErrorCode::ConfigError, "controller names unknown mode " + m.dump());
      cell.modes.insert(static_cast<std::size_t>(it - names.begin()));
    }
    cells.push_back(std::move(cell));
  }
  return Controller(Region::full(std::move(omega)), std::move(cells));
}

void write_trace_csv(std::ostream& os, const SwitchedSystem& sys, const SimTrace& trace) {
  os << 'k';
  for (std::size_t i = 1; i <= sys.dim(); ++i) os << ",x" << i;
  os << ",mode,in_omega\n";
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    os << k;
    for (double v : trace.states[k]) os << ',' << format_double(v);
    os << ',' << (k < trace.modes.size() ? sys.mode(trace.modes[k]).name : std::string()) << ','
       << (trace.in_omega[k] ? "true" : "false") << '\n';
  }
}

void write_abstraction_csv(std::ostream& os, const SwitchedSystem& sys, std::span<const Transition> transitions) {
  os << "i,mode,j\n";
  for (const auto& t : transitions) os << t.from << ',' << sys.mode(t.mode).name << ',' << t.to << '\n';
}

}  // namespace invkit
