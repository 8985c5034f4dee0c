#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rtree/numerics.hpp"
#include "rtree/rng.hpp"
#include "rtree/tree.hpp"

namespace rtree {

class BranchLengthSequence;

// Index i at which the tracked point moved onto the new branch b_i, landing at distance
// `offset` = a_i V_i from the graft point.
struct Jump {
  std::size_t index = 0;
  double offset = 0.0;
};

// The coupled pair (T_n, X_n): X_n moves onto b_{i} when U_i <= a_i / A_i and is otherwise
// left in place while b_i is glued at an independent uniform point.
struct TrackedBuild {
  Tree tree;
  PointLocation x;
  std::vector<Jump> jump_log;     // first `log_cap` jumps
  std::size_t jump_count = 0;     // all jumps, including any past the cap
  double jump_sum = 0.0;          // sum of all jump offsets == ht(X_n)
  bool log_truncated = false;
};

inline constexpr std::size_t kDefaultJumpLogCap = 1'000'000;

// Stream(seed) drives the run. Step 1 draws V_1. Each step i >= 2 draws U_i, then V_i if
// U_i <= a_i / A_i, otherwise the two uniforms of TreeGrower::pick_uniform.
TrackedBuild build_with_tracked_point(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed,
                                      std::size_t log_cap = kDefaultJumpLogCap);

// X_k reconstructed from the jump log (requires an untruncated log, k <= n).
PointLocation tracked_position(const TrackedBuild& build, std::size_t k);

// True when X stayed put over (n0, n], i.e. no jump index lies in that range.
bool frozen_after(const TrackedBuild& build, std::size_t n0);

// Draws of ht(X_n) = sum_{i<=n} a_i V_i 1{U_i <= a_i / A_i} without building a tree.
// Construction is O(n); each draw is O(#jumps * log n).
class HeightLawSampler {
 public:
  HeightLawSampler(BranchLengthSequence& seq, std::size_t n);

  // n = infinity: truncates at the least dyadic N with tail_h(N, 64 N) < tolerance.
  // Throws TruncationError if 64 N would exceed `index_cap`.
  static HeightLawSampler for_limit(BranchLengthSequence& seq, double tolerance,
                                    std::size_t index_cap = std::size_t{1} << 22);

  double draw(Stream& stream) const;
  std::size_t n() const noexcept { return n_; }
  // Expected mass of the dropped indices, 0.5 * tail_h(N + 1, 64 N); zero for finite n.
  double truncation_error() const noexcept { return truncation_error_; }

 private:
  std::vector<double> lengths_;  // a_1..a_n
  IndependentEvents events_;     // indices 2..n with p_i = a_i / A_i
  std::size_t n_ = 0;
  double truncation_error_ = 0.0;
};

// One draw (builds a sampler; use HeightLawSampler for batches).
double sample_height_law(BranchLengthSequence& seq, std::size_t n, Stream& stream);

struct MgfValue {
  double value = 0.0;      // +inf when it overflows
  double log_value = 0.0;  // always finite for finite inputs
  bool overflow = false;
};

// E[exp(lambda ht(X_n))] = prod_i ((A_i - a_i)/A_i + (a_i/A_i) (e^{lambda a_i} - 1)/(lambda a_i)).
MgfValue height_mgf(BranchLengthSequence& seq, std::size_t n, double lambda);

struct ExpBoundCheck {
  MgfValue mgf;
  double bound = 0.0;      // exp(lambda h_of_a(n))
  double log_bound = 0.0;
  bool ok = false;         // mgf <= bound + 1e-12
};

// Requires 0 <= lambda <= 1 / sup_{i<=n} a_i, otherwise ParameterError.
ExpBoundCheck exp_bound_check(BranchLengthSequence& seq, std::size_t n, double lambda);

}  // namespace rtree
