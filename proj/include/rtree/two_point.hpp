#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rtree/numerics.hpp"
#include "rtree/rng.hpp"
#include "rtree/sequences.hpp"
#include "rtree/tree.hpp"

namespace rtree {

// Law of the distance D_K between two independent mu_K-points of T_K, written as a mixture
// over the last branch k carrying both points:
//   P(k) = w_k = p_k prod_{k<j<=K} (1 - p_j),   p_j = (a_j / A_j)^2,
//   D_K | k  =  a_k |V_k - V'_k| + sum_{k<i<=K} a_i V_i 1{U_i <= 2 a_i / (A_i + a_i)}.
// Immutable after construction.
class TwoPointLaw {
 public:
  TwoPointLaw(BranchLengthSequence& seq, std::size_t K);

  // The infinite-K law, truncated at the least dyadic K whose tail budget is below
  // `tolerance`. Throws TruncationError if 8 K would exceed `index_cap`.
  static TwoPointLaw for_limit(BranchLengthSequence& seq, double tolerance,
                               std::size_t index_cap = std::size_t{1} << 22);

  std::size_t K() const noexcept { return lengths_.size(); }
  // w_1..w_K
  std::span<const double> weights() const noexcept { return weights_; }
  double p(std::size_t k) const noexcept { return p_[k - 1]; }
  // sum_{K<i<=8K} a_i^2 / (A_i + a_i): the mean of what truncation at K drops, estimated on
  // the next three octaves (fewer for short explicit sequences).
  double tail_mean_budget() const noexcept { return tail_budget_; }
  // E[D_K] = sum_k w_k (a_k / 3 + sum_{k<i<=K} a_i^2 / (A_i + a_i)).
  double exact_mean() const noexcept { return exact_mean_; }

  // Mixture index by inversion over the cumulative weights (one uniform).
  std::size_t draw_index(Stream& stream) const;
  double sample(Stream& stream) const;

 private:
  std::vector<double> lengths_;
  std::vector<double> p_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  IndependentEvents events_;  // i = 2..K, 2 a_i / (A_i + a_i)
  double tail_budget_ = 0.0;
  double exact_mean_ = 0.0;
};

TwoPointLaw mixture_weights(BranchLengthSequence& seq, std::size_t K);
double sample_D(const TwoPointLaw& law, Stream& stream);

// m draws of distance(sample_uniform, sample_uniform) on one tree (quenched).
std::vector<double> empirical_D(const Tree& tree, Stream& stream, std::size_t m);

// Annealed version: `trees` independent trees (tree t built with seed
// derive_stream_seed(seed, t)), `per_tree` draws from each. Parallel over trees; the result
// order is by tree index.
std::vector<double> annealed_empirical_D(BranchLengthSequence& seq, std::size_t n, std::size_t trees,
                                         std::size_t per_tree, std::uint64_t seed);

struct TailExponent {
  ExponentFit fit;                  // slope of log P(D <= r) against log r; NaN if < 3 nonzero counts
  std::vector<double> r;
  std::vector<std::size_t> counts;  // #{D <= r} out of m
  std::size_t m = 0;
  bool low_counts = false;          // smallest count < 100: widen the grid
};

// r_grid: >= 3 strictly decreasing positive radii, otherwise ParameterError.
TailExponent tail_exponent(const TwoPointLaw& law, std::span<const double> r_grid, std::size_t m,
                           std::uint64_t seed);
TailExponent tail_exponent(const Tree& tree, std::span<const double> r_grid, std::size_t m,
                           std::uint64_t seed);
TailExponent tail_exponent_from_samples(std::span<const double> samples, std::span<const double> r_grid);

struct NegativeMoment {
  double mean = 0.0;
  double std_error = 0.0;
  double clip = 0.0;  // D is replaced by max(D, clip)
};

// Monte Carlo E[max(D, clip)^-gamma] with clip = law.tail_mean_budget().
NegativeMoment negative_moment(const TwoPointLaw& law, double gamma, std::size_t m, Stream& stream);

}  // namespace rtree
