#include <doctest.h>

#include <cmath>

#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/sequences.hpp"
#include "rtree/two_point.hpp"

using namespace rtree;

TEST_CASE("mixture weights") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto one = mixture_weights(seq, 1);
  REQUIRE(one.weights().size() == 1);
  CHECK(one.weights()[0] == 1.0);

  std::vector<BranchLengthSequence> families;
  families.push_back(BranchLengthSequence::power_law(0.5));
  families.push_back(BranchLengthSequence::power_law(2.0));
  families.push_back(BranchLengthSequence::poisson_intervals(1.0, 2));
  families.push_back(BranchLengthSequence::spiked());
  for (auto& s : families) {
    for (std::size_t K : {1UL, 10UL, 1000UL, 100'000UL}) {
      const auto law = mixture_weights(s, K);
      CompensatedSum total;
      for (double w : law.weights()) {
        REQUIRE(w >= 0.0);
        total += w;
      }
      CHECK(std::fabs(total.value() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("partial-tail identity: sum_{k<=m} w_k = prod_{j>m} (1 - p_j)") {
  auto seq = BranchLengthSequence::power_law(0.75);
  const auto law = mixture_weights(seq, 2000);
  CompensatedSum head;
  for (std::size_t m = 1; m < 2000; ++m) {
    head += law.weights()[m - 1];
    long double product = 1.0L;
    for (std::size_t j = m + 1; j <= 2000; ++j) product *= 1.0L - law.p(j);
    REQUIRE(std::fabs(head.value() - static_cast<double>(product)) <= 1e-12);
  }
}

TEST_CASE("K = 1: D = a_1 |V - V'|") {
  auto seq = BranchLengthSequence::constant(3.0);
  const auto law = mixture_weights(seq, 1);
  CHECK(law.exact_mean() == doctest::Approx(1.0));
  Stream stream(1);
  RunningStats s;
  for (int k = 0; k < 100'000; ++k) s.add(sample_D(law, stream));
  CHECK(std::fabs(s.mean() - 1.0) <= 3.0 * s.stderr_mean());
}

TEST_CASE("Monte Carlo mean matches the exact mean") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto law = mixture_weights(seq, 1000);
  Stream stream(2);
  RunningStats s;
  for (int k = 0; k < 400'000; ++k) s.add(sample_D(law, stream));
  CHECK(std::fabs(s.mean() - law.exact_mean()) <= 3.0 * s.stderr_mean());
}

TEST_CASE("exact mean is non-decreasing in K") {
  auto seq = BranchLengthSequence::power_law(0.5);
  double previous = 0.0;
  for (std::size_t K = 1; K <= 4096; K *= 2) {
    const double mean = mixture_weights(seq, K).exact_mean();
    CHECK(mean >= previous - 1e-15);
    previous = mean;
  }
}

TEST_CASE("distances on built trees") {
  SUBCASE("single segment") {
    auto seq = BranchLengthSequence::constant(1.5);
    const Tree tree = build_tree(seq, 1, 1);
    Stream stream(3);
    const auto d = empirical_D(tree, stream, 100'000);
    const auto s = summarize(d);
    CHECK(std::fabs(s.mean() - 0.5) <= 3.0 * s.stderr_mean());
  }
  SUBCASE("annealed mean matches the exact mean") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const auto d = annealed_empirical_D(seq, 200, 20'000, 1, 4);
    const auto s = summarize(d);
    CHECK(std::fabs(s.mean() - mixture_weights(seq, 200).exact_mean()) <= 3.0 * s.stderr_mean());
  }
  SUBCASE("law and trees agree in distribution") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const auto law = mixture_weights(seq, 1000);
    Stream stream(5);
    std::vector<double> from_law(8000);
    for (auto& x : from_law) x = sample_D(law, stream);
    const auto from_trees = annealed_empirical_D(seq, 1000, 8000, 1, 6);
    CHECK(ks_statistic(from_law, from_trees) < ks_critical(8000, 8000));
  }
  SUBCASE("swapping the roles of the two streams leaves the law unchanged") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const Tree tree = build_tree(seq, 2000, 7);
    Stream a(8), b(9), c(8), e(9);
    std::vector<double> forward, backward;
    for (int k = 0; k < 10'000; ++k) {
      forward.push_back(distance(tree, sample_uniform(tree, a), sample_uniform(tree, b)));
    }
    for (int k = 0; k < 10'000; ++k) {
      const auto y = sample_uniform(tree, e);
      backward.push_back(distance(tree, y, sample_uniform(tree, c)));
    }
    CHECK(forward == backward);
    Stream f(10);
    CHECK(ks_statistic(forward, empirical_D(tree, f, 10'000)) < ks_critical(10'000, 10'000));
  }
}

TEST_CASE("tail exponent") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto law = mixture_weights(seq, 1 << 16);
  const std::vector<double> grid{0.25, 0.125, 0.0625, 0.03125};
  const auto tail = tail_exponent(law, grid, 300'000, 11);
  CHECK(tail.fit.slope >= 1.6);
  CHECK(tail.fit.slope <= 2.4);
  CHECK(tail.counts.size() == 4);
  CHECK_FALSE(tail.low_counts);
  for (std::size_t k = 1; k < tail.counts.size(); ++k) CHECK(tail.counts[k] <= tail.counts[k - 1]);

  const std::vector<double> single{0.1};
  CHECK_THROWS_AS(tail_exponent(law, single, 1000, 1), ParameterError);
  const std::vector<double> increasing{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(tail_exponent(law, increasing, 1000, 1), ParameterError);

  const std::vector<double> tiny{1e-2, 1e-4, 1e-6};
  CHECK(tail_exponent(law, tiny, 1000, 1).low_counts);
}

TEST_CASE("negative moments are finite and stable below 1 / alpha") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const auto law = mixture_weights(seq, 1 << 16);
  for (double gamma : {0.5, 0.8}) {
    Stream s1(12), s2(13);
    const auto small = negative_moment(law, gamma, 100'000, s1);
    const auto large = negative_moment(law, gamma, 400'000, s2);
    CHECK(std::isfinite(small.mean));
    CHECK(small.clip == law.tail_mean_budget());
    CHECK(std::fabs(small.mean - large.mean) <=
          3.0 * std::sqrt(small.std_error * small.std_error + large.std_error * large.std_error));
  }
}

TEST_CASE("limit law truncation") {
  auto seq = BranchLengthSequence::power_law(2.0);
  const auto law = TwoPointLaw::for_limit(seq, 1e-4);
  CHECK(law.tail_mean_budget() < 1e-4);
  auto flat = BranchLengthSequence::constant(1.0);
  CHECK_THROWS_AS(TwoPointLaw::for_limit(flat, 1e-6, 1 << 16), TruncationError);
}
