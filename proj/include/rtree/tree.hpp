#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rtree/rng.hpp"

namespace rtree {

class BranchLengthSequence;

// A point of T_n: `offset` is the distance from the root-side endpoint of branch `branch`.
// Branch ids are 1-based; the root rho is {1, 0}.
struct PointLocation {
  std::size_t branch = 1;
  double offset = 0.0;

  friend bool operator==(const PointLocation&, const PointLocation&) = default;
};

struct Branch {
  std::size_t id = 0;
  std::size_t parent_id = 0;   // 0 for branch 1
  double attach_offset = 0.0;  // position of the graft point on the parent branch
  double length = 0.0;
  double attach_height = 0.0;  // distance from the root to the graft point
};

// One row of the edge list: everything needed to rebuild a branch.
struct BranchRecord {
  std::size_t parent_id = 0;
  double attach_offset = 0.0;
  double length = 0.0;
};

// A closed interval [lo, hi] on one branch.
struct BranchInterval {
  std::size_t branch = 1;
  double lo = 0.0;
  double hi = 0.0;
};

// T_n as an arena of branches. Branch i >= 2 hangs from a point of a branch with a smaller
// id, so every ancestor walk strictly decreases the id. Immutable once finished; all queries
// are const and re-entrant.
class Tree {
 public:
  // Validates and assembles a tree from edge-list rows (row k describes branch k + 1).
  // Throws FormatError naming the offending branch id.
  static Tree from_records(std::span<const BranchRecord> records, std::uint64_t seed = 0);

  // Empty placeholder (size() == 0).
  Tree() = default;

  std::size_t size() const noexcept { return parent_.size() - 1; }
  std::uint64_t seed() const noexcept { return seed_; }
  double total_length() const noexcept { return prefix_.back(); }
  Branch branch(std::size_t id) const;
  std::size_t parent(std::size_t id) const noexcept { return parent_[id]; }
  double attach_offset(std::size_t id) const noexcept { return offset_[id]; }
  double length(std::size_t id) const noexcept { return length_[id]; }
  double attach_height(std::size_t id) const noexcept { return height_[id]; }
  // Sum of the lengths of branches 1..id (compensated).
  double length_prefix(std::size_t id) const noexcept { return prefix_[id]; }

  // Children of a branch ordered by attach offset (ties by id).
  std::span<const std::size_t> children(std::size_t id) const;

  PointLocation root() const noexcept { return {1, 0.0}; }
  bool contains(const PointLocation& p) const noexcept;
  // Throws LocationError unless contains(p).
  void check(const PointLocation& p) const;

 private:
  friend class TreeGrower;
  void append(std::size_t parent, double offset, double length);
  void index_children();

  std::uint64_t seed_ = 0;
  // Index 0 is a sentinel so that vectors are indexed by branch id.
  std::vector<std::size_t> parent_{0};
  std::vector<double> offset_{0.0};
  std::vector<double> length_{0.0};
  std::vector<double> height_{0.0};
  std::vector<double> prefix_{0.0};
  double prefix_comp_ = 0.0;
  double prefix_raw_ = 0.0;
  std::vector<std::size_t> child_start_;
  std::vector<std::size_t> child_ids_;
};

// Incremental construction. Geometry queries (distance, height, sample_uniform, ...) work on
// the tree under construction through view(); children() only after finish().
class TreeGrower {
 public:
  TreeGrower(double first_length, std::uint64_t seed, std::size_t reserve = 0);

  // A point uniform for the length measure on the current tree: branch j with probability
  // a_j / A, offset uniform on the branch. Consumes two uniforms (branch, then offset).
  PointLocation pick_uniform(Stream& stream) const;
  // Grafts a new branch of the given length at `at` and returns its id.
  std::size_t graft(const PointLocation& at, double length);

  const Tree& view() const noexcept { return tree_; }
  std::size_t size() const noexcept { return tree_.size(); }
  Tree finish() &&;

 private:
  Tree tree_;
};

// Uniform gluing: branch i >= 2 is grafted on a point of T_{i-1} chosen uniformly by length.
// The stream is Stream(seed); each graft draws (u, v): parent by inversion of u * A_{i-1}
// over the partial sums, attach offset v * a_parent.
Tree build_tree(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed);

// Length of the unique path between p and q.
double distance(const Tree& tree, const PointLocation& p, const PointLocation& q);

// The point of T_k closest to p. Throws ParameterError unless 1 <= k <= tree.size().
PointLocation project(const Tree& tree, const PointLocation& p, std::size_t k);

// One draw from the normalized length measure mu_n.
PointLocation sample_uniform(const Tree& tree, Stream& stream);

double height(const Tree& tree, const PointLocation& p);
double max_height(const Tree& tree);

// Lengths of the stems cut out of a branch by its children's graft points.
std::vector<double> stem_lengths(const Tree& tree, std::size_t branch);
double longest_stem(const Tree& tree);

// Total length of {x in T_upto : [x]_i in C} for C = interval (a branch of T_i).
// `upto` defaults to tree.size().
double subtree_length(const Tree& tree, std::size_t i, const BranchInterval& interval,
                      std::size_t upto = 0);

// Edge-list CSV: header `id,parent_id,attach_offset,length`, ids ascending, 17 significant
// digits so export -> import -> export is byte-identical.
void write_tree_csv(const Tree& tree, std::ostream& out);
void export_tree(const Tree& tree, const std::filesystem::path& path);
Tree read_tree_csv(std::istream& in);
Tree import_tree(const std::filesystem::path& path);

}  // namespace rtree
