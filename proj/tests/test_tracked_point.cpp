#include <doctest.h>

#include <cmath>

#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/sequences.hpp"
#include "rtree/tracked_point.hpp"

using namespace rtree;

TEST_CASE("n = 1: the tracked point sits at a_1 V_1") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto build = build_with_tracked_point(seq, 1, 17);
  Stream stream(17);
  CHECK(build.x == PointLocation{1, stream.uniform()});
  CHECK(build.jump_count == 1);

  RunningStats s;
  auto c = BranchLengthSequence::constant(2.0);
  for (std::uint64_t k = 0; k < 20'000; ++k) {
    Stream st(k);
    s.add(sample_height_law(c, 1, st));
  }
  CHECK(std::fabs(s.mean() - 1.0) <= 3.0 * s.stderr_mean());
}

TEST_CASE("height of X_n is the sum of its jumps and X_k is its projection") {
  auto seq = BranchLengthSequence::power_law(0.5);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto build = build_with_tracked_point(seq, 3000, seed);
    CompensatedSum jumps;
    for (const auto& j : build.jump_log) jumps += j.offset;
    CHECK(height(build.tree, build.x) == doctest::Approx(jumps.value()).epsilon(1e-12));
    CHECK(build.jump_sum == doctest::Approx(jumps.value()).epsilon(1e-12));
    CHECK(build.jump_count == build.jump_log.size());

    Stream stream(seed + 1000);
    double previous = 0.0;
    for (std::size_t m = 1; m <= 3000; m += 1 + static_cast<std::size_t>(stream.uniform() * 300)) {
      const auto xm = tracked_position(build, m);
      CHECK(project(build.tree, build.x, m) == xm);
      double later = 0.0;
      for (const auto& j : build.jump_log) {
        if (j.index > m) later += j.offset;
      }
      CHECK(std::fabs(distance(build.tree, build.x, xm) - later) <= 1e-10);
      const double h = height(build.tree, xm);
      CHECK(h >= previous);
      previous = h;
    }
  }
}

TEST_CASE("jump log cap degrades to count and sum") {
  auto seq = BranchLengthSequence::constant(1.0);
  const auto full = build_with_tracked_point(seq, 5000, 3);
  const auto capped = build_with_tracked_point(seq, 5000, 3, 2);
  CHECK(capped.jump_log.size() == 2);
  CHECK(capped.log_truncated == (full.jump_count > 2));
  CHECK(capped.jump_count == full.jump_count);
  CHECK(capped.jump_sum == full.jump_sum);
  if (capped.log_truncated) CHECK_THROWS_AS(frozen_after(capped, 10), ParameterError);
}

TEST_CASE("tracked point and a mu_n point have the same height law") {
  constexpr std::size_t n = 1000;
  constexpr std::size_t m = 10'000;
  auto seq = BranchLengthSequence::power_law(0.5);
  std::vector<double> tracked(m), sampled(m);
  parallel_for(m, [&](std::size_t k) {
    const auto build = build_with_tracked_point(seq, n, derive_stream_seed(1, k));
    tracked[k] = height(build.tree, build.x);
    const Tree tree = build_tree(seq, n, derive_stream_seed(2, k));
    Stream stream(derive_stream_seed(3, k));
    sampled[k] = height(tree, sample_uniform(tree, stream));
  });
  CHECK(ks_statistic(tracked, sampled) < ks_critical(m, m));
}

TEST_CASE("height law sampler") {
  SUBCASE("mean is H / 2") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const HeightLawSampler sampler(seq, 1000);
    Stream stream(5);
    RunningStats s;
    for (int k = 0; k < 200'000; ++k) s.add(sampler.draw(stream));
    CHECK(std::fabs(s.mean() - 0.5 * h_of_a(seq, 1000)) <= 3.0 * s.stderr_mean());
  }
  SUBCASE("constant lengths: means follow half the harmonic sum") {
    auto seq = BranchLengthSequence::constant(1.0);
    for (std::size_t n : {10UL, 1000UL, 100'000UL}) {
      const HeightLawSampler sampler(seq, n);
      Stream stream(n);
      RunningStats s;
      for (int k = 0; k < 50'000; ++k) s.add(sampler.draw(stream));
      double harmonic = 0.0;
      for (std::size_t i = 1; i <= n; ++i) harmonic += 1.0 / static_cast<double>(i);
      CHECK(std::fabs(s.mean() - 0.5 * harmonic) <= 3.0 * s.stderr_mean());
    }
  }
  SUBCASE("n = infinity truncates with a reported budget") {
    auto seq = BranchLengthSequence::power_law(2.0);
    const auto sampler = HeightLawSampler::for_limit(seq, 1e-4);
    CHECK(tail_h(seq, sampler.n(), 64 * sampler.n()) < 1e-4);
    CHECK(sampler.truncation_error() > 0.0);
    CHECK(sampler.truncation_error() < 1e-4);
    auto divergent = BranchLengthSequence::constant(1.0);
    CHECK_THROWS_AS(HeightLawSampler::for_limit(divergent, 1e-3), TruncationError);
  }
}

TEST_CASE("height MGF") {
  auto seq = BranchLengthSequence::power_law(0.5);
  CHECK(height_mgf(seq, 100, 0.0).value == 1.0);
  const double lambda = 0.7;
  CHECK(height_mgf(seq, 1, lambda).value == doctest::Approx(std::expm1(lambda) / lambda).epsilon(1e-15));
  CHECK(height_mgf(seq, 1, 1e-10).value == doctest::Approx(1.0 + 0.5e-10).epsilon(1e-15));

  const HeightLawSampler sampler(seq, 1000);
  Stream stream(8);
  RunningStats s;
  for (int k = 0; k < 200'000; ++k) s.add(std::exp(0.5 * sampler.draw(stream)));
  CHECK(std::fabs(s.mean() - height_mgf(seq, 1000, 0.5).value) <= 3.0 * s.stderr_mean());

  auto big = BranchLengthSequence::constant(1.0);
  const auto huge = height_mgf(big, 1'000'000, 1000.0);
  CHECK(huge.overflow);
  CHECK(std::isfinite(huge.log_value));
}

TEST_CASE("exponential bound holds on a lambda grid for several families") {
  std::vector<BranchLengthSequence> families;
  families.push_back(BranchLengthSequence::power_law(0.5));
  families.push_back(BranchLengthSequence::power_law(2.0));
  families.push_back(BranchLengthSequence::poisson_intervals(1.0, 4));
  families.push_back(BranchLengthSequence::log_power(2.0));
  families.push_back(BranchLengthSequence::spiked());
  for (auto& seq : families) {
    seq.ensure(10'000);
    const double top = 1.0 / seq.sup_a(10'000);
    for (int k = 0; k <= 10; ++k) CHECK(exp_bound_check(seq, 10'000, top * k / 10.0).ok);
    CHECK_THROWS_AS(exp_bound_check(seq, 10'000, 1.01 * top), ParameterError);
    CHECK_THROWS_AS(exp_bound_check(seq, 10'000, -0.1), ParameterError);
  }
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto zero = exp_bound_check(seq, 50, 0.0);
  CHECK(zero.mgf.value == 1.0);
  CHECK(zero.bound == 1.0);
}

TEST_CASE("freezing probability A_n0 / A_N") {
  constexpr std::size_t n0 = 10, N = 1000, runs = 20'000;
  auto seq = BranchLengthSequence::power_law(2.0);
  seq.ensure(N);
  std::vector<char> frozen(runs);
  parallel_for(runs, [&](std::size_t k) {
    frozen[k] = frozen_after(build_with_tracked_point(seq, N, derive_stream_seed(77, k)), n0);
  });
  const double p = seq.A(n0) / seq.A(N);
  const double f = static_cast<double>(std::count(frozen.begin(), frozen.end(), 1)) / runs;
  CHECK(std::fabs(f - p) <= 3.0 * std::sqrt(p * (1 - p) / runs));
}
