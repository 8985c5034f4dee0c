#include "rtree/two_point.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

#include "rtree/errors.hpp"

namespace rtree {

TwoPointLaw::TwoPointLaw(BranchLengthSequence& seq, std::size_t K) {
  if (K < 1) throw ParameterError("two-point law needs K >= 1");
  seq.ensure(K);
  lengths_.assign(seq.lengths(K).begin(), seq.lengths(K).end());
  p_.resize(K);
  std::vector<double> jump_p;
  jump_p.reserve(K);
  for (std::size_t k = 1; k <= K; ++k) {
    const double r = seq.a(k) / seq.A(k);
    p_[k - 1] = r * r;
    if (k >= 2) jump_p.push_back(2.0 * seq.a(k) / (seq.A(k) + seq.a(k)));
  }
  events_ = IndependentEvents(2, jump_p);

  // w_k = p_k exp(sum_{j>k} log(1 - p_j)); the suffix log-sum is compensated.
  weights_.resize(K);
  CompensatedSum suffix;
  for (std::size_t k = K; k >= 1; --k) {
    weights_[k - 1] = p_[k - 1] * std::exp(suffix.value());
    if (k >= 2) suffix += std::log1p(-p_[k - 1]);
  }
  cumulative_.resize(K);
  CompensatedSum cum;
  for (std::size_t k = 0; k < K; ++k) {
    cum += weights_[k];
    cumulative_[k] = cum.value();
  }

  // exact mean via the suffix sums S_k = sum_{k<i<=K} a_i^2 / (A_i + a_i)
  CompensatedSum mean;
  CompensatedSum jumps_after;
  for (std::size_t k = K; k >= 1; --k) {
    mean += weights_[k - 1] * (seq.a(k) / 3.0 + jumps_after.value());
    jumps_after += seq.a(k) * seq.a(k) / (seq.A(k) + seq.a(k));
  }
  exact_mean_ = mean.value();

  std::size_t tail_end = 8 * K;
  if (auto cap = seq.max_terms()) tail_end = std::min(tail_end, *cap);
  CompensatedSum tail;
  if (tail_end > K) {
    seq.ensure(tail_end);
    for (std::size_t i = K + 1; i <= tail_end; ++i) tail += seq.a(i) * seq.a(i) / (seq.A(i) + seq.a(i));
  }
  tail_budget_ = tail.value();
}

TwoPointLaw TwoPointLaw::for_limit(BranchLengthSequence& seq, double tolerance, std::size_t index_cap) {
  if (!(tolerance > 0.0)) throw ParameterError("tolerance must be positive");
  for (std::size_t K = 1; 8 * K <= index_cap; K *= 2) {
    if (seq.max_terms() && 8 * K > *seq.max_terms()) break;
    seq.ensure(8 * K);
    CompensatedSum tail;
    for (std::size_t i = K + 1; i <= 8 * K; ++i) tail += seq.a(i) * seq.a(i) / (seq.A(i) + seq.a(i));
    if (tail.value() < tolerance) return TwoPointLaw(seq, K);
  }
  throw TruncationError("two-point tail budget did not reach the tolerance under the index cap");
}

std::size_t TwoPointLaw::draw_index(Stream& stream) const {
  const double target = stream.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin()) + 1;
}

double TwoPointLaw::sample(Stream& stream) const {
  const std::size_t k = draw_index(stream);
  const double v = stream.uniform();
  const double w = stream.uniform();
  double d = lengths_[k - 1] * std::fabs(v - w);
  for (std::size_t i = events_.next(k, stream); i != 0; i = events_.next(i, stream)) {
    d += lengths_[i - 1] * stream.uniform();
  }
  return d;
}

TwoPointLaw mixture_weights(BranchLengthSequence& seq, std::size_t K) { return TwoPointLaw(seq, K); }

double sample_D(const TwoPointLaw& law, Stream& stream) { return law.sample(stream); }

std::vector<double> empirical_D(const Tree& tree, Stream& stream, std::size_t m) {
  if (m < 1) throw ParameterError("empirical_D needs m >= 1");
  std::vector<double> out;
  out.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    const PointLocation x = sample_uniform(tree, stream);
    const PointLocation y = sample_uniform(tree, stream);
    out.push_back(distance(tree, x, y));
  }
  return out;
}

std::vector<double> annealed_empirical_D(BranchLengthSequence& seq, std::size_t n, std::size_t trees,
                                         std::size_t per_tree, std::uint64_t seed) {
  if (trees < 1 || per_tree < 1) throw ParameterError("annealed_empirical_D needs trees, per_tree >= 1");
  seq.ensure(n);
  std::vector<double> out(trees * per_tree);
  parallel_for(trees, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_stream_seed(seed, t);
    const Tree tree = build_tree(seq, n, tree_seed);
    Stream stream(mix64(tree_seed));
    auto draws = empirical_D(tree, stream, per_tree);
    std::copy(draws.begin(), draws.end(), out.begin() + static_cast<std::ptrdiff_t>(t * per_tree));
  });
  return out;
}

namespace {

void check_grid(std::span<const double> r_grid) {
  if (r_grid.size() < 3) throw ParameterError("radius grid needs at least 3 points");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0)) throw ParameterError("radii must be positive");
    if (i > 0 && !(r_grid[i] < r_grid[i - 1])) throw ParameterError("radii must be strictly decreasing");
  }
}

}  // namespace

TailExponent tail_exponent_from_samples(std::span<const double> samples, std::span<const double> r_grid) {
  check_grid(r_grid);
  TailExponent out;
  out.m = samples.size();
  out.r.assign(r_grid.begin(), r_grid.end());
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> pairs;
  for (double r : r_grid) {
    const auto c = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), r) - sorted.begin());
    out.counts.push_back(c);
    if (c > 0) pairs.emplace_back(r, static_cast<double>(c) / static_cast<double>(out.m));
  }
  out.low_counts = *std::min_element(out.counts.begin(), out.counts.end()) < 100;
  if (pairs.size() >= 3) {
    out.fit = fit_exponent(pairs);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.fit = {nan, nan, nan, pairs.size()};
  }
  return out;
}

TailExponent tail_exponent(const TwoPointLaw& law, std::span<const double> r_grid, std::size_t m,
                           std::uint64_t seed) {
  check_grid(r_grid);
  if (m < 1) throw ParameterError("tail_exponent needs m >= 1");
  Stream stream(seed);
  std::vector<double> samples(m);
  for (auto& d : samples) d = law.sample(stream);
  return tail_exponent_from_samples(samples, r_grid);
}

TailExponent tail_exponent(const Tree& tree, std::span<const double> r_grid, std::size_t m,
                           std::uint64_t seed) {
  check_grid(r_grid);
  Stream stream(seed);
  return tail_exponent_from_samples(empirical_D(tree, stream, m), r_grid);
}

NegativeMoment negative_moment(const TwoPointLaw& law, double gamma, std::size_t m, Stream& stream) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (m < 2) throw ParameterError("negative_moment needs m >= 2");
  NegativeMoment out;
  out.clip = law.tail_mean_budget();
  RunningStats stats;
  for (std::size_t s = 0; s < m; ++s) {
    const double d = std::max(law.sample(stream), out.clip);
    stats.add(std::pow(d, -gamma));
  }
  out.mean = stats.mean();
  out.std_error = stats.stderr_mean();
  return out;
}

}  // namespace rtree
