#include "rtree/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace rtree {

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n1 = static_cast<double>(count_);
  const double n2 = static_cast<double>(other.count_);
  const double d = other.mean_ - mean_;
  const double n = n1 + n2;
  mean_ += d * n2 / n;
  m2_ += other.m2_ + d * d * n1 * n2 / n;
  count_ += other.count_;
}

RunningStats summarize(std::span<const double> values) {
  RunningStats s;
  for (double v : values) s.add(v);
  return s;
}

double ks_statistic(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) return 1.0;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double c) {
  const double a = static_cast<double>(n);
  const double b = static_cast<double>(m);
  return c * std::sqrt((a + b) / (a * b));
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RTREE_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // unparsable cap is ignored
    }
  }
  return hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) return;
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(count);
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rtree

namespace rtree {

IndependentEvents::IndependentEvents(std::size_t first, std::span<const double> probabilities)
    : first_(first) {
  hazard_.reserve(probabilities.size() + 1);
  CompensatedSum h;
  for (double p : probabilities) {
    h += -std::log1p(-p);
    hazard_.push_back(h.value());
  }
}

std::size_t IndependentEvents::locate(std::size_t after, double exponential) const {
  const std::size_t k0 = after + 1 - first_;  // hazard_ slot of `after`
  if (k0 + 1 >= hazard_.size()) return 0;
  const double target = hazard_[k0] + exponential;
  auto it = std::lower_bound(hazard_.begin() + static_cast<std::ptrdiff_t>(k0) + 1, hazard_.end(), target);
  if (it == hazard_.end()) return 0;
  return first_ + static_cast<std::size_t>(it - hazard_.begin()) - 1;
}

}  // namespace rtree
