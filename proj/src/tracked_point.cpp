#include "rtree/tracked_point.hpp"

#include <algorithm>
#include <cmath>

#include "rtree/errors.hpp"
#include "rtree/sequences.hpp"

namespace rtree {

TrackedBuild build_with_tracked_point(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed,
                                      std::size_t log_cap) {
  if (n < 1) throw ParameterError("build_with_tracked_point needs n >= 1");
  seq.ensure(n);
  Stream stream(seed);
  TreeGrower grower(seq.a(1), seed, n);
  TrackedBuild out;
  auto record = [&](std::size_t i, double offset) {
    ++out.jump_count;
    out.jump_sum += offset;
    if (out.jump_log.size() < log_cap) {
      out.jump_log.push_back({i, offset});
    } else {
      out.log_truncated = true;
    }
  };

  PointLocation x{1, seq.a(1) * stream.uniform()};
  record(1, x.offset);
  for (std::size_t i = 2; i <= n; ++i) {
    const double a = seq.a(i);
    if (stream.uniform() <= a / seq.A(i)) {
      const std::size_t id = grower.graft(x, a);
      x = {id, a * stream.uniform()};
      record(i, x.offset);
    } else {
      grower.graft(grower.pick_uniform(stream), a);
    }
  }
  out.x = x;
  out.tree = std::move(grower).finish();
  return out;
}

PointLocation tracked_position(const TrackedBuild& build, std::size_t k) {
  if (build.log_truncated) throw ParameterError("jump log was truncated");
  if (k < 1 || k > build.tree.size()) throw ParameterError("step out of range");
  auto it = std::upper_bound(build.jump_log.begin(), build.jump_log.end(), k,
                             [](std::size_t v, const Jump& j) { return v < j.index; });
  const Jump& j = *std::prev(it);  // jump 1 always exists
  return {j.index, j.offset};
}

bool frozen_after(const TrackedBuild& build, std::size_t n0) {
  if (build.log_truncated) throw ParameterError("jump log was truncated");
  return build.jump_log.back().index <= n0;
}

HeightLawSampler::HeightLawSampler(BranchLengthSequence& seq, std::size_t n) : n_(n) {
  if (n < 1) throw ParameterError("height law needs n >= 1");
  seq.ensure(n);
  auto a = seq.lengths(n);
  lengths_.assign(a.begin(), a.end());
  std::vector<double> p;
  p.reserve(n);
  for (std::size_t i = 2; i <= n; ++i) p.push_back(seq.a(i) / seq.A(i));
  events_ = IndependentEvents(2, p);
}

HeightLawSampler HeightLawSampler::for_limit(BranchLengthSequence& seq, double tolerance,
                                             std::size_t index_cap) {
  if (!(tolerance > 0.0)) throw ParameterError("tolerance must be positive");
  for (std::size_t n = 1; 64 * n <= index_cap; n *= 2) {
    if (seq.max_terms() && 64 * n > *seq.max_terms()) break;
    if (tail_h(seq, n, 64 * n) < tolerance) {
      HeightLawSampler s(seq, n);
      s.truncation_error_ = 0.5 * tail_h(seq, n + 1, 64 * n);
      return s;
    }
  }
  throw TruncationError(
      "tail budget did not reach the tolerance under the index cap (H(a) may be infinite)");
}

double HeightLawSampler::draw(Stream& stream) const {
  double h = lengths_[0] * stream.uniform();
  for (std::size_t i = events_.next(1, stream); i != 0; i = events_.next(i, stream)) {
    h += lengths_[i - 1] * stream.uniform();
  }
  return h;
}

double sample_height_law(BranchLengthSequence& seq, std::size_t n, Stream& stream) {
  return HeightLawSampler(seq, n).draw(stream);
}

namespace {

// (e^x - 1)/x - 1, accurate near 0.
double expm1_ratio_minus_one(double x) {
  if (x < 1e-4) return x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
  return std::expm1(x) / x - 1.0;
}

// log((1 - p) + p (e^x - 1) / x), kept in log space once e^x would overflow.
double log_mgf_factor(double p, double x) {
  if (x < 500.0) return std::log1p(p * expm1_ratio_minus_one(x));
  const double log_ratio = x + std::log(-std::expm1(-x)) - std::log(x);
  const double hi = std::log(p) + log_ratio;
  if (p >= 1.0) return hi;
  return hi + std::log1p(std::exp(std::log1p(-p) - hi));
}

}  // namespace

MgfValue height_mgf(BranchLengthSequence& seq, std::size_t n, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
  if (n < 1) throw ParameterError("height_mgf needs n >= 1");
  seq.ensure(n);
  MgfValue out;
  if (lambda == 0.0) {
    out.value = 1.0;
    return out;
  }
  CompensatedSum log_sum;
  for (std::size_t i = 1; i <= n; ++i) {
    const double a = seq.a(i);
    const double p = a / seq.A(i);
    log_sum += log_mgf_factor(p, lambda * a);
  }
  out.log_value = log_sum.value();
  out.value = std::exp(out.log_value);
  out.overflow = std::isinf(out.value);
  return out;
}

ExpBoundCheck exp_bound_check(BranchLengthSequence& seq, std::size_t n, double lambda) {
  if (n < 1) throw ParameterError("exp_bound_check needs n >= 1");
  seq.ensure(n);
  const double limit = 1.0 / seq.sup_a(n);
  if (!(lambda >= 0.0) || lambda > limit * (1.0 + 1e-12)) {
    throw ParameterError("lambda must lie in [0, 1/sup a]");
  }
  ExpBoundCheck out;
  out.mgf = height_mgf(seq, n, lambda);
  out.log_bound = lambda * h_of_a(seq, n);
  out.bound = std::exp(out.log_bound);
  if (out.mgf.overflow || std::isinf(out.bound)) {
    out.ok = out.mgf.log_value <= out.log_bound + 1e-12;
  } else {
    out.ok = out.mgf.value <= out.bound + 1e-12;
  }
  return out;
}

}  // namespace rtree
