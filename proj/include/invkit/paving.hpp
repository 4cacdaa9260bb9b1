#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "invkit/interval.hpp"

namespace invkit {

/// Subset of a system's ordered mode list, stored as a bitset (at most 64
/// modes).
class ModeSet {
 public:
  static constexpr std::size_t kMaxModes = 64;

  constexpr ModeSet() = default;
  static ModeSet single(std::size_t p);
  static constexpr ModeSet from_bits(std::uint64_t bits) { return ModeSet(bits); }

  void insert(std::size_t p);
  bool contains(std::size_t p) const noexcept { return p < kMaxModes && (bits_ >> p) & 1U; }
  bool empty() const noexcept { return bits_ == 0; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  /// Lowest mode index; requires !empty().
  std::size_t first() const noexcept { return static_cast<std::size_t>(std::countr_zero(bits_)); }
  std::uint64_t bits() const noexcept { return bits_; }
  std::vector<std::size_t> to_vector() const;

  ModeSet& operator|=(ModeSet o) noexcept {
    bits_ |= o.bits_;
    return *this;
  }
  friend ModeSet operator|(ModeSet a, ModeSet b) noexcept { return a |= b; }
  friend bool operator==(ModeSet a, ModeSet b) = default;

 private:
  constexpr explicit ModeSet(std::uint64_t bits) : bits_(bits) {}
  std::uint64_t bits_ = 0;
};

/// A closed region: the union of the IN leaves of a bisection tree rooted at
/// each box of a forest. Every node box comes from its root by the canonical
/// bisection rule, and sibling leaves never share a label, so the tree is
/// canonical for the set it represents and equality is structural.
///
/// Regions are immutable values; the editing operations return new regions.
class Region {
 public:
  Region() = default;

  /// Roots must share a dimension, have positive width in every dimension,
  /// and be pairwise interior-disjoint.
  static Region empty(std::vector<Box> roots);
  static Region full(std::vector<Box> roots);
  /// Union of boxes aligned with the canonical subdivision of the roots.
  /// Throws MisalignedBox for a box no bisection sequence generates.
  static Region from_boxes(std::vector<Box> roots, std::span<const Box> boxes);

  const std::vector<Box>& roots() const noexcept { return roots_; }
  std::size_t dim() const noexcept { return roots_.empty() ? 0 : roots_.front().dim(); }
  bool is_empty() const noexcept;

  /// q is a subset of the closed IN union. Exact except when q is degenerate
  /// exactly on a split plane, where the answer is conservative (may be false
  /// for a face covered jointly by both sides).
  bool contains_box(const Box& q) const;
  /// q meets the closed IN union; face contact counts.
  bool intersects_box(const Box& q) const;
  bool contains_point(std::span<const double> x) const;
  /// Every IN leaf of other lies in this region. Both must share roots.
  bool contains_region(const Region& other) const;

  Region remove_boxes(std::span<const Box> boxes) const;
  Region add_boxes(std::span<const Box> boxes) const;
  Region complement() const;

  double volume() const;
  std::vector<Box> leaves_in() const;
  /// Number of IN leaves.
  std::size_t leaf_count() const;
  /// Number of tree nodes over all roots, OUT leaves included.
  std::size_t node_count() const;
  /// Hull of the IN leaves; throws EmptyResult for an empty region.
  Box hull() const;

  friend bool operator==(const Region& a, const Region& b);

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t dim = 0;
    bool in = false;
    double mid = 0.0;
    bool is_leaf() const noexcept { return left < 0; }
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  explicit Region(std::vector<Box> roots, bool in);
  void paint(const Box& box, bool in);
  void reduce();
  bool pieces_covered(const Box& q) const;

  std::vector<Box> roots_;
  std::vector<Tree> trees_;
};

/// Result of classifying a box list against a target region.
struct ClassifiedPaving {
  std::vector<std::pair<Box, ModeSet>> inside;
  std::vector<Box> undetermined;
  std::vector<Box> outside;
};

/// One exported paving entry. An empty mode set marks an undetermined box.
struct PavingCell {
  Box box;
  ModeSet modes;
  bool undetermined = false;
};

/// Canonical order used for every exported box list: lexicographic on
/// (lo1, hi1, lo2, hi2, ...).
bool box_less(const Box& a, const Box& b);

/// CSV: one line per cell, "lo1,hi1,...,lon,hin,tag,modes" with tag IN or
/// UNDET and '|'-separated mode names (empty for UNDET).
void write_paving_csv(std::ostream& os, std::span<const PavingCell> cells,
                      std::span<const std::string> mode_names);
std::vector<PavingCell> read_paving_csv(std::istream& is, std::span<const std::string> mode_names);
/// JSON mirror of the CSV with the same fields.
std::string paving_to_json(std::span<const PavingCell> cells, std::span<const std::string> mode_names);

}  // namespace invkit
