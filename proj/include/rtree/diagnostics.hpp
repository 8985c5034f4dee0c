#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rtree/rng.hpp"
#include "rtree/sequences.hpp"
#include "rtree/tree.hpp"

namespace rtree {

// ---------------------------------------------------------------------------
// Mass martingales

// M_t for the recorded steps t (indices ascending, starting at i0).
struct UrnTrajectory {
  std::size_t i0 = 1;
  double m0 = 1.0;
  std::vector<std::size_t> steps;
  std::vector<double> values;
};

// Generalized Polya urn: from M_t = m, M_{t+1} = (A_t m + a_{t+1}) / A_{t+1} with probability
// m and A_t m / A_{t+1} otherwise. Records every step when `checkpoints` is empty, else only
// the listed steps (each in [i0, n]).
UrnTrajectory urn_simulate(BranchLengthSequence& seq, std::size_t i0, double m0, std::size_t n,
                           Stream& stream, std::span<const std::size_t> checkpoints = {});

// Largest distance between a recorded M_{t+1} and the nearer of its two admissible values
// given M_t, over consecutive recorded steps. 0 for trajectories without consecutive steps.
double urn_recursion_mismatch(const BranchLengthSequence& seq, const UrnTrajectory& traj);

// A finite union of disjoint intervals on branches of T_{i0}.
struct MassRegion {
  std::vector<BranchInterval> intervals;

  // All of T_{i0}.
  static MassRegion whole_tree(BranchLengthSequence& seq, std::size_t i0);
};

struct TrackedMass {
  Tree tree;  // identical to build_tree(seq, n, seed)
  UrnTrajectory trajectory;
};

// Builds T_n with the same draws as build_tree(seq, n, seed) while recording
// M_t = mu_t(T_t^{(i0)}(C)) at the checkpoints (every step when empty).
// Throws LocationError if C is not a disjoint union of intervals on branches <= i0.
TrackedMass track_mass(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed, std::size_t i0,
                       const MassRegion& region, std::span<const std::size_t> checkpoints = {});

// Builds one tree to step n and cuts T_{n0} into `parts` pieces of equal length along the
// concatenation b_1, b_2, ..., b_{n0}. Returns 1/2 sum_i |M_n(C_i) - M_m(C_i)|: the total
// variation between the two measures projected onto T_{n0} and discretized on the pieces.
double lp_projected_distance(BranchLengthSequence& seq, std::size_t n, std::size_t m, std::size_t n0,
                             std::size_t parts, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Coverings and dimension

struct HangingSubtree {
  PointLocation root;                 // where the subtree meets T_m
  double length = 0.0;                // total length of its branches
  double height = 0.0;                // max distance from root to a point of the subtree
  std::vector<std::size_t> branches;  // ids > m, ascending
};

// Decomposition of T_n \ T_m into subtrees grouped by their attachment point on T_m.
struct CoveringProfile {
  std::size_t m = 0;
  std::vector<HangingSubtree> entries;  // ordered by root (branch, offset)
};

CoveringProfile covering_profile(const Tree& tree, std::size_t m);

// Farthest-point traversal over a point cloud on a tree. After k centres the covering radius
// is R_k = max_x min_c d(x, c); N(eps) = least k with R_k <= eps. Each new centre only
// relaxes points within the current radius, found by a bounded walk along the tree.
// Requires a finished tree.
std::vector<std::size_t> net_sizes(const Tree& tree, std::span<const PointLocation> points,
                                   std::span<const double> eps_grid);

struct BoxDimensionRow {
  std::size_t n = 0;
  std::uint64_t replicate = 0;
  double eps = 0.0;
  std::size_t count = 0;
};

struct BoxDimension {
  double slope = 0.0;           // log N(eps) against log(1/eps), at the largest n
  double std_error = 0.0;
  std::vector<BoxDimensionRow> table;
  bool sample_limited = false;  // some N(eps_min) exceeds samples / 10
};

// For every n and replicate r < replicates: tree built with derive_stream_seed(seed, r),
// `samples` mu_n points, N(eps) from net_sizes. eps_grid needs >= 3 distinct positive values.
BoxDimension box_dimension(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                           std::span<const double> eps_grid, std::size_t replicates,
                           std::uint64_t seed, std::size_t samples = 200'000);

// ---------------------------------------------------------------------------
// Branch statistics and growth probes

struct GoodBranchStats {
  std::size_t count = 0;  // #{i in [n, 2n] : a_i >= i^(-alpha-eps)}
  double length = 0.0;    // sum of those a_i
};

// alpha is supplied by the caller; eps >= 0.
GoodBranchStats good_branch_stats(BranchLengthSequence& seq, std::size_t n, double alpha, double eps);

struct GrowthRow {
  std::size_t n = 0;
  std::uint64_t replicate = 0;
  double value = 0.0;
};

struct GrowthCurve {
  std::vector<GrowthRow> table;
  ExponentFit fit;  // log of the across-replicate mean against log n
};

// max_height(T_n) for every n in the grid; replicate r grows one tree with seed
// derive_stream_seed(seed, r) up to max(n_grid) and reads off its prefixes. Exploratory.
GrowthCurve boundedness_probe(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                              std::size_t replicates, std::uint64_t seed);

// longest_stem(T_n) for every n in the grid, one independent tree per (n, replicate).
GrowthCurve longest_stem_scaling(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                                 std::size_t replicates, std::uint64_t seed);

}  // namespace rtree
