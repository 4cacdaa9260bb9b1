#include "invkit/paving.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace invkit {

ModeSet ModeSet::single(std::size_t p) {
  ModeSet s;
  s.insert(p);
  return s;
}

void ModeSet::insert(std::size_t p) {
  if (p >= kMaxModes) throw Error(ErrorCode::InvalidArgument, "mode index exceeds 64");
  bits_ |= std::uint64_t{1} << p;
}

std::vector<std::size_t> ModeSet::to_vector() const {
  std::vector<std::size_t> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
  }
  return out;
}

namespace {

std::string misaligned(const Box& b) {
  return "box " + to_string(b) + " is not generated by canonical bisection of the roots";
}

bool has_positive_sides(const Box& b) {
  for (const auto& d : b.intervals()) {
    if (!(d.width() > 0.0)) return false;
  }
  return true;
}

}  // namespace

Region::Region(std::vector<Box> roots, bool in) : roots_(std::move(roots)) {
  if (roots_.empty()) throw Error(ErrorCode::InvalidArgument, "region needs at least one root box");
  const std::size_t n = roots_.front().dim();
  for (std::size_t i = 0; i < roots_.size(); ++i) {
    const Box& r = roots_[i];
    if (r.dim() != n || n == 0) throw Error(ErrorCode::InvalidArgument, "root boxes differ in dimension");
    for (const auto& d : r.intervals()) {
      if (!d.is_bounded() || !(d.width() > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "root box " + to_string(r) + " must be bounded with positive sides");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      auto common = intersect(r, roots_[j]);
      if (common && invkit::volume(*common) > 0.0) {
        throw Error(ErrorCode::InvalidArgument, "root boxes overlap: " + to_string(r) + " and " + to_string(roots_[j]));
      }
    }
  }
  trees_.resize(roots_.size());
  for (auto& t : trees_) {
    Node leaf;
    leaf.in = in;
    t.nodes.push_back(leaf);
  }
}

Region Region::empty(std::vector<Box> roots) { return Region(std::move(roots), false); }
Region Region::full(std::vector<Box> roots) { return Region(std::move(roots), true); }

Region Region::from_boxes(std::vector<Box> roots, std::span<const Box> boxes) {
  Region r(std::move(roots), false);
  for (const auto& b : boxes) r.paint(b, true);
  r.reduce();
  return r;
}

Region Region::remove_boxes(std::span<const Box> boxes) const {
  Region r = *this;
  for (const auto& b : boxes) r.paint(b, false);
  r.reduce();
  return r;
}

Region Region::add_boxes(std::span<const Box> boxes) const {
  Region r = *this;
  for (const auto& b : boxes) r.paint(b, true);
  r.reduce();
  return r;
}

Region Region::complement() const {
  Region r = *this;
  for (auto& t : r.trees_) {
    for (auto& node : t.nodes) {
      if (node.is_leaf()) node.in = !node.in;
    }
  }
  return r;
}

void Region::paint(const Box& box, bool in) {
  if (box.dim() != dim() || !has_positive_sides(box)) throw Error(ErrorCode::MisalignedBox, misaligned(box));
  std::size_t t = 0;
  while (t < roots_.size() && !contains(roots_[t], box)) ++t;
  if (t == roots_.size()) throw Error(ErrorCode::MisalignedBox, misaligned(box));

  auto& nodes = trees_[t].nodes;
  std::vector<Interval> cur(roots_[t].intervals().begin(), roots_[t].intervals().end());
  std::int32_t idx = 0;
  for (;;) {
    bool equal = true;
    for (std::size_t d = 0; d < cur.size() && equal; ++d) equal = cur[d] == box[d];
    if (equal) {
      nodes[idx].left = nodes[idx].right = -1;
      nodes[idx].in = in;
      return;
    }
    if (nodes[idx].is_leaf()) {
      if (nodes[idx].in == in) return;
      const Box node_box(cur);
      const std::size_t d = widest_dim(node_box);
      Node child;
      child.in = nodes[idx].in;
      const auto l = static_cast<std::int32_t>(nodes.size());
      nodes.push_back(child);
      nodes.push_back(child);
      nodes[idx].left = l;
      nodes[idx].right = l + 1;
      nodes[idx].dim = static_cast<std::uint32_t>(d);
      nodes[idx].mid = node_box[d].mid();
    }
    const Node& node = nodes[idx];
    const std::size_t d = node.dim;
    if (box[d].hi() <= node.mid) {
      cur[d] = Interval(cur[d].lo(), node.mid);
      idx = node.left;
    } else if (box[d].lo() >= node.mid) {
      cur[d] = Interval(node.mid, cur[d].hi());
      idx = node.right;
    } else {
      throw Error(ErrorCode::MisalignedBox, misaligned(box));
    }
  }
}

void Region::reduce() {
  for (auto& t : trees_) {
    std::vector<Node> out;
    out.reserve(t.nodes.size());
    std::function<void(std::int32_t)> copy = [&](std::int32_t idx) {
      const Node& src = t.nodes[idx];
      const auto self = static_cast<std::int32_t>(out.size());
      out.push_back(src);
      if (src.is_leaf()) return;
      const auto l = static_cast<std::int32_t>(out.size());
      copy(src.left);
      const auto r = static_cast<std::int32_t>(out.size());
      copy(src.right);
      if (out[l].is_leaf() && out[r].is_leaf() && out[l].in == out[r].in) {
        const bool label = out[l].in;
        out.resize(l);
        out[self] = Node{};
        out[self].in = label;
      } else {
        out[self].left = l;
        out[self].right = r;
      }
    };
    copy(0);
    t.nodes = std::move(out);
  }
}

bool Region::is_empty() const noexcept {
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (n.is_leaf() && n.in) return false;
    }
  }
  return true;
}

namespace {

// Query kernels working on raw endpoint arrays; the query box is never
// clipped because only comparisons against split midpoints matter.
struct Query {
  const double* lo;
  const double* hi;
};

template <class Node>
bool tree_contains(const std::vector<Node>& nodes, std::int32_t idx, const Query& q) {
  for (;;) {
    const Node& n = nodes[idx];
    if (n.is_leaf()) return n.in;
    const double m = n.mid;
    const double l = q.lo[n.dim];
    const double h = q.hi[n.dim];
    if (h < m || (h == m && l < m)) {
      idx = n.left;
    } else if (l > m || (l == m && h > m)) {
      idx = n.right;
    } else if (l < m && h > m) {
      if (!tree_contains(nodes, n.left, q)) return false;
      idx = n.right;
    } else {
      // Degenerate on the split plane: either side's closure may cover it.
      return tree_contains(nodes, n.left, q) || tree_contains(nodes, n.right, q);
    }
  }
}

template <class Node>
bool tree_intersects(const std::vector<Node>& nodes, std::int32_t idx, const Query& q) {
  for (;;) {
    const Node& n = nodes[idx];
    if (n.is_leaf()) return n.in;
    const double m = n.mid;
    if (q.hi[n.dim] < m) {
      idx = n.left;
    } else if (q.lo[n.dim] > m) {
      idx = n.right;
    } else {
      if (tree_intersects(nodes, n.left, q)) return true;
      idx = n.right;
    }
  }
}

template <class Node>
bool tree_contains_point(const std::vector<Node>& nodes, std::int32_t idx, std::span<const double> x) {
  for (;;) {
    const Node& n = nodes[idx];
    if (n.is_leaf()) return n.in;
    const double v = x[n.dim];
    if (v < n.mid) {
      idx = n.left;
    } else if (v > n.mid) {
      idx = n.right;
    } else {
      return tree_contains_point(nodes, n.left, x) || tree_contains_point(nodes, n.right, x);
    }
  }
}

}  // namespace

bool Region::contains_box(const Box& q) const {
  if (q.dim() != dim() || roots_.empty()) return false;
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    if (contains(roots_[t], q)) {
      std::vector<double> lo(q.dim()), hi(q.dim());
      for (std::size_t d = 0; d < q.dim(); ++d) {
        lo[d] = q[d].lo();
        hi[d] = q[d].hi();
      }
      return tree_contains(trees_[t].nodes, 0, Query{lo.data(), hi.data()});
    }
  }
  return roots_.size() > 1 && pieces_covered(q);
}

// Coverage of a box that spans several roots: clip it against each root in
// turn, check the clipped core in that root's tree and carry the remainder
// pieces to the following roots.
bool Region::pieces_covered(const Box& q) const {
  std::vector<Box> pieces{q};
  for (std::size_t t = 0; t < roots_.size() && !pieces.empty(); ++t) {
    const Box& root = roots_[t];
    std::vector<Box> next;
    for (const Box& piece : pieces) {
      if (!intersects(piece, root)) {
        next.push_back(piece);
        continue;
      }
      std::vector<Interval> core(piece.intervals().begin(), piece.intervals().end());
      bool core_degenerate_only_by_clip = false;
      for (std::size_t d = 0; d < core.size(); ++d) {
        const Interval& r = root[d];
        if (core[d].lo() < r.lo()) {
          std::vector<Interval> rest = core;
          rest[d] = Interval(core[d].lo(), r.lo());
          next.emplace_back(rest);
          core[d] = Interval(r.lo(), core[d].hi());
        }
        if (core[d].hi() > r.hi()) {
          std::vector<Interval> rest = core;
          rest[d] = Interval(r.hi(), core[d].hi());
          next.emplace_back(rest);
          core[d] = Interval(core[d].lo(), r.hi());
        }
        if (core[d].width() == 0.0 && piece[d].width() > 0.0) core_degenerate_only_by_clip = true;
      }
      if (core_degenerate_only_by_clip) continue;
      std::vector<double> lo(core.size()), hi(core.size());
      for (std::size_t d = 0; d < core.size(); ++d) {
        lo[d] = core[d].lo();
        hi[d] = core[d].hi();
      }
      if (!tree_contains(trees_[t].nodes, 0, Query{lo.data(), hi.data()})) return false;
    }
    pieces = std::move(next);
  }
  return pieces.empty();
}

bool Region::intersects_box(const Box& q) const {
  if (q.dim() != dim()) return false;
  std::vector<double> lo(q.dim()), hi(q.dim());
  for (std::size_t d = 0; d < q.dim(); ++d) {
    lo[d] = q[d].lo();
    hi[d] = q[d].hi();
  }
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    if (intersects(roots_[t], q) && tree_intersects(trees_[t].nodes, 0, Query{lo.data(), hi.data()})) {
      return true;
    }
  }
  return false;
}

bool Region::contains_point(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    if (invkit::contains_point(roots_[t], x) && tree_contains_point(trees_[t].nodes, 0, x)) return true;
  }
  return false;
}

bool Region::contains_region(const Region& other) const {
  if (other.roots_ != roots_) throw Error(ErrorCode::InvalidArgument, "regions have different roots");
  for (const Box& b : other.leaves_in()) {
    if (!contains_box(b)) return false;
  }
  return true;
}

namespace {

template <class Node, class Visit>
void visit_leaves(const std::vector<Node>& nodes, std::int32_t idx, std::vector<Interval>& cur, Visit&& visit) {
  const Node& n = nodes[idx];
  if (n.is_leaf()) {
    visit(n, cur);
    return;
  }
  const Interval saved = cur[n.dim];
  cur[n.dim] = Interval(saved.lo(), n.mid);
  visit_leaves(nodes, n.left, cur, visit);
  cur[n.dim] = Interval(n.mid, saved.hi());
  visit_leaves(nodes, n.right, cur, visit);
  cur[n.dim] = saved;
}

}  // namespace

double Region::volume() const {
  double v = 0.0;
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    std::vector<Interval> cur(roots_[t].intervals().begin(), roots_[t].intervals().end());
    visit_leaves(trees_[t].nodes, 0, cur, [&](const Node& n, const std::vector<Interval>& box) {
      if (!n.in) return;
      double p = 1.0;
      for (const auto& d : box) p *= d.width();
      v += p;
    });
  }
  return v;
}

std::vector<Box> Region::leaves_in() const {
  std::vector<Box> out;
  for (std::size_t t = 0; t < roots_.size(); ++t) {
    std::vector<Interval> cur(roots_[t].intervals().begin(), roots_[t].intervals().end());
    visit_leaves(trees_[t].nodes, 0, cur, [&](const Node& n, const std::vector<Interval>& box) {
      if (n.in) out.emplace_back(box);
    });
  }
  return out;
}

std::size_t Region::leaf_count() const {
  std::size_t c = 0;
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) c += (n.is_leaf() && n.in) ? 1 : 0;
  }
  return c;
}

std::size_t Region::node_count() const {
  std::size_t c = 0;
  for (const auto& t : trees_) c += t.nodes.size();
  return c;
}

Box Region::hull() const {
  const auto leaves = leaves_in();
  if (leaves.empty()) throw Error(ErrorCode::EmptyResult, "hull of an empty region");
  Box h = leaves.front();
  for (const auto& b : leaves) h = invkit::hull(h, b);
  return h;
}

bool operator==(const Region& a, const Region& b) {
  if (a.roots_ != b.roots_) return false;
  for (std::size_t t = 0; t < a.trees_.size(); ++t) {
    const auto& na = a.trees_[t].nodes;
    const auto& nb = b.trees_[t].nodes;
    if (na.size() != nb.size()) return false;
    for (std::size_t i = 0; i < na.size(); ++i) {
      const auto& x = na[i];
      const auto& y = nb[i];
      if (x.left != y.left || x.right != y.right) return false;
      if (x.is_leaf()) {
        if (x.in != y.in) return false;
      } else if (x.dim != y.dim || x.mid != y.mid) {
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Export

bool box_less(const Box& a, const Box& b) {
  const std::size_t n = std::min(a.dim(), b.dim());
  for (std::size_t d = 0; d < n; ++d) {
    if (a[d].lo() != b[d].lo()) return a[d].lo() < b[d].lo();
    if (a[d].hi() != b[d].hi()) return a[d].hi() < b[d].hi();
  }
  return a.dim() < b.dim();
}

namespace {

std::string join_modes(ModeSet modes, std::span<const std::string> names) {
  std::string out;
  for (std::size_t p : modes.to_vector()) {
    if (!out.empty()) out += '|';
    out += p < names.size() ? names[p] : std::to_string(p);
  }
  return out;
}

}  // namespace

void write_paving_csv(std::ostream& os, std::span<const PavingCell> cells,
                      std::span<const std::string> mode_names) {
  for (const auto& c : cells) {
    os << to_string(c.box) << ',' << (c.undetermined ? "UNDET" : "IN") << ','
       << (c.undetermined ? std::string() : join_modes(c.modes, mode_names)) << '\n';
  }
}

std::vector<PavingCell> read_paving_csv(std::istream& is, std::span<const std::string> mode_names) {
  std::vector<PavingCell> cells;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto modes_sep = line.rfind(',');
    const auto tag_sep = modes_sep == std::string::npos ? std::string::npos : line.rfind(',', modes_sep - 1);
    if (tag_sep == std::string::npos) {
      throw Error(ErrorCode::IoError, "paving line " + std::to_string(lineno) + " is malformed");
    }
    PavingCell cell;
    cell.box = parse_box(std::string_view(line).substr(0, tag_sep));
    const std::string tag = line.substr(tag_sep + 1, modes_sep - tag_sep - 1);
    if (tag != "IN" && tag != "UNDET") {
      throw Error(ErrorCode::IoError, "paving line " + std::to_string(lineno) + " has tag '" + tag + "'");
    }
    cell.undetermined = tag == "UNDET";
    std::stringstream names(line.substr(modes_sep + 1));
    std::string name;
    while (std::getline(names, name, '|')) {
      if (name.empty()) continue;
      auto it = std::find(mode_names.begin(), mode_names.end(), name);
      if (it == mode_names.end()) {
        throw Error(ErrorCode::IoError, "paving line " + std::to_string(lineno) + " names unknown mode '" + name + "'");
      }
      cell.modes.insert(static_cast<std::size_t>(it - mode_names.begin()));
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string paving_to_json(std::span<const PavingCell> cells, std::span<const std::string> mode_names) {
  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json box = nlohmann::ordered_json::array();
    for (const auto& d : c.box.intervals()) {
      box.push_back(d.lo());
      box.push_back(d.hi());
    }
    nlohmann::ordered_json modes = nlohmann::ordered_json::array();
    if (!c.undetermined) {
      for (std::size_t p : c.modes.to_vector()) modes.push_back(p < mode_names.size() ? mode_names[p] : std::to_string(p));
    }
    cells_json.push_back({{"box", box}, {"tag", c.undetermined ? "UNDET" : "IN"}, {"modes", modes}});
  }
  nlohmann::ordered_json doc;
  doc["mode_names"] = std::vector<std::string>(mode_names.begin(), mode_names.end());
  doc["cells"] = std::move(cells_json);
  return doc.dump(1) + "\n";
}

}  // namespace invkit
