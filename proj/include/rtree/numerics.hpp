#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rtree {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double start) : sum_(start) {}

  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Streaming mean and variance (Welford).
class RunningStats {
 public:
  void add(double x) noexcept {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& other) noexcept;

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }
  // Standard error of the mean.
  double stderr_mean() const noexcept {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

RunningStats summarize(std::span<const double> values);

// Two-sample Kolmogorov-Smirnov statistic sup |F_x - F_y|. Inputs need not be sorted.
double ks_statistic(std::vector<double> x, std::vector<double> y);

// Asymptotic two-sample critical value c * sqrt((n + m) / (n m)); c = 1.95 at level 0.001.
double ks_critical(std::size_t n, std::size_t m, double c = 1.95);

// Number of workers for replicate batches: hardware concurrency capped by RTREE_THREADS.
unsigned worker_count();

// Runs body(i) for i in [0, count) over worker_count() threads. Each index runs exactly once;
// callers write results into per-index slots so output order never depends on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rtree

namespace rtree {

// Independent Bernoulli events B_i ~ Bernoulli(p_i) for i = first..last, sampled by jumping
// straight to the next success: with cumulative hazard H(m) = sum_{first<=i<=m} -log(1 - p_i),
// the next success after j is the least m with H(m) >= H(j) + E, E standard exponential.
// Costs O(log n) per success instead of O(1) per index. Requires p_i < 1.
class IndependentEvents {
 public:
  IndependentEvents() = default;
  // probabilities[k] is p_{first + k}.
  IndependentEvents(std::size_t first, std::span<const double> probabilities);

  std::size_t first() const noexcept { return first_; }
  std::size_t last() const noexcept { return first_ + hazard_.size() - 2; }
  // Next success index strictly after `after` (after >= first - 1), or 0 if none <= last.
  template <typename StreamT>
  std::size_t next(std::size_t after, StreamT& stream) const {
    return locate(after, stream.exponential());
  }

 private:
  std::size_t locate(std::size_t after, double exponential) const;

  std::size_t first_ = 1;
  // hazard_[k] = H(first + k - 1); hazard_[0] = 0.
  std::vector<double> hazard_{0.0};
};

}  // namespace rtree
