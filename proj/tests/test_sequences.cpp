#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/rng.hpp"
#include "rtree/sequences.hpp"

using namespace rtree;

namespace {

double direct_h(const BranchLengthSequence& seq, std::size_t from, std::size_t to) {
  long double s = 0.0L;
  for (std::size_t i = from; i <= to; ++i) s += static_cast<long double>(seq.a(i)) * seq.a(i) / seq.A(i);
  return static_cast<double>(s);
}

std::filesystem::path temp_file(const char* name, const char* body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("power law terms are i^-alpha") {
  auto seq = BranchLengthSequence::power_law(1.0);
  const auto a = generate(seq, 3);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == 0.5);
  CHECK(a[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(seq.A(3) == doctest::Approx(11.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("first poisson interval inverts Lambda(t) = t^2 / 2") {
  const std::uint64_t seed = 99;
  auto seq = BranchLengthSequence::poisson_intervals(1.0, seed);
  Stream stream(derive_stream_seed(seed, kSequenceStreamTag));
  const double e1 = stream.exponential();
  seq.ensure(1);
  CHECK(seq.a(1) == doctest::Approx(std::sqrt(2.0 * e1)).epsilon(1e-14));
}

TEST_CASE("poisson intervals count t^2 / 2 points on [0, t]") {
  for (double t : {1.0, 2.0}) {
    RunningStats counts;
    for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
      auto seq = BranchLengthSequence::poisson_intervals(1.0, seed);
      std::size_t k = 0;
      for (;; ++k) {
        seq.ensure(k + 1);
        if (seq.A(k + 1) > t) break;
      }
      counts.add(static_cast<double>(k));
    }
    CHECK(std::fabs(counts.mean() - t * t / 2.0) <= 3.0 * counts.stderr_mean());
  }
}

TEST_CASE("sequences are deterministic given kind, parameter and seed") {
  auto x = BranchLengthSequence::poisson_intervals(1.0, 5);
  auto y = BranchLengthSequence::poisson_intervals(1.0, 5);
  const auto a = generate(x, 1000);
  const auto b = generate(y, 1000);
  CHECK(a == b);
  auto z = BranchLengthSequence::poisson_intervals(1.0, 6);
  CHECK(generate(z, 1000) != a);
}

TEST_CASE("partial sums are strictly increasing and compensated") {
  auto seq = BranchLengthSequence::constant(0.1);
  seq.ensure(1'000'000);
  for (std::size_t i = 1; i <= 1000; ++i) REQUIRE(seq.A(i) > seq.A(i - 1));
  CHECK(std::fabs(seq.A(1'000'000) - 1'000'000 * 0.1) < 1e-9);
  auto poisson = BranchLengthSequence::poisson_intervals(0.5, 3);
  poisson.ensure(5000);
  for (std::size_t i = 1; i <= 5000; ++i) REQUIRE(poisson.a(i) > 0.0);
}

TEST_CASE("h_of_a") {
  SUBCASE("n = 1 gives a_1") {
    auto seq = BranchLengthSequence::power_law(0.7);
    seq.ensure(1);
    CHECK(h_of_a(seq, 1) == seq.a(1));
    auto c = BranchLengthSequence::constant(2.5);
    CHECK(h_of_a(c, 1) == 2.5);
  }
  SUBCASE("constant lengths give the harmonic sum") {
    auto seq = BranchLengthSequence::constant(1.0);
    double harmonic = 0.0;
    for (int i = 1; i <= 10; ++i) harmonic += 1.0 / i;
    CHECK(h_of_a(seq, 10) == doctest::Approx(harmonic).epsilon(1e-15));
  }
  SUBCASE("log-power lambda = 2: Cauchy increments shrink") {
    auto seq = BranchLengthSequence::log_power(2.0);
    double previous = 1e300;
    for (std::size_t n = 1 << 8; n <= (1 << 20); n <<= 2) {
      const double inc = tail_h(seq, n + 1, 4 * n);
      CHECK(inc < previous);
      previous = inc;
    }
  }
  SUBCASE("non-decreasing in n") {
    auto seq = BranchLengthSequence::spiked();
    double previous = 0.0;
    for (std::size_t n = 1; n <= 2000; n += 37) {
      const double h = h_of_a(seq, n);
      CHECK(h >= previous);
      previous = h;
    }
  }
}

TEST_CASE("tail_h matches differences of h_of_a and direct summation") {
  auto seq = BranchLengthSequence::power_law(0.5);
  seq.ensure(1);
  CHECK(tail_h(seq, 1, 1) == seq.a(1));
  Stream stream(4);
  for (int k = 0; k < 50; ++k) {
    const auto n = 1 + static_cast<std::size_t>(stream.uniform() * 5000);
    const auto N = n + static_cast<std::size_t>(stream.uniform() * 5000);
    const double t = tail_h(seq, n, N);
    // The difference of two partial sums cancels, so its error scales with h_of_a(N).
    const double hN = h_of_a(seq, N);
    CHECK(std::fabs(hN - h_of_a(seq, n - 1) - t) <= 1e-12 * hN);
    CHECK(t == doctest::Approx(direct_h(seq, n, N)).epsilon(1e-13));
  }
}

TEST_CASE("tail_h exponent for alpha = 1/2") {
  auto seq = BranchLengthSequence::power_law(0.5);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t n = 1 << 6; n <= (1 << 16); n <<= 1) {
    pairs.emplace_back(static_cast<double>(n), tail_h(seq, n, 64 * n));
  }
  const auto fit = fit_exponent(pairs);
  CHECK(fit.slope >= -0.65);
  CHECK(fit.slope <= -0.35);
}

TEST_CASE("series diagnostics") {
  SUBCASE("N = 1") {
    auto seq = BranchLengthSequence::power_law(1.3);
    seq.ensure(1);
    const auto d = series_diagnostics(seq, 1);
    CHECK(d.sum_a == seq.a(1));
    CHECK(d.sup_a == seq.a(1));
    CHECK(d.sum_ratio_sq == 1.0);
    CHECK(d.sum_a_over_A2 == doctest::Approx(1.0 / seq.a(1)));
  }
  SUBCASE("constant lengths: sum (a/A)^2 stays below pi^2 / 6") {
    auto seq = BranchLengthSequence::constant(1.0);
    const auto d = series_diagnostics(seq, 100'000);
    double direct = 0.0;
    for (int i = 100'000; i >= 1; --i) direct += 1.0 / (static_cast<double>(i) * i);
    CHECK(d.sum_ratio_sq == doctest::Approx(direct).epsilon(1e-13));
    CHECK(d.sum_ratio_sq < std::numbers::pi * std::numbers::pi / 6.0);
    CHECK(d.inc_ratio_sq == doctest::Approx(d.sum_ratio_sq - series_diagnostics(seq, 50'000).sum_ratio_sq));
  }
  SUBCASE("spiked sequence: sup above 1 and partial sums keep growing") {
    auto seq = BranchLengthSequence::spiked();
    const auto d = series_diagnostics(seq, 10'000);
    CHECK(d.sup_a > 1.0);
    CHECK(d.inc_sum_a > 0.25 * d.sum_a);
    seq.ensure(27);
    CHECK(seq.a(8) == doctest::Approx(1.0 + 1.0 / std::sqrt(8.0)));
    CHECK(seq.a(9) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("fit_exponent") {
  std::vector<std::pair<double, double>> pairs;
  for (double n : {2.0, 10.0, 100.0, 1e4}) pairs.emplace_back(n, std::pow(n, -2.0));
  auto fit = fit_exponent(pairs);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(fit.stderr_slope < 1e-9);
  pairs.clear();
  for (double n : {3.0, 30.0, 300.0}) pairs.emplace_back(n, 7.5 * std::sqrt(n));
  CHECK(fit_exponent(pairs).slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(fit_exponent(std::vector<std::pair<double, double>>{{1, 1}, {2, 2}}), ParameterError);
  CHECK_THROWS_AS(fit_exponent(std::vector<std::pair<double, double>>{{1, 1}, {2, 0}, {3, 1}}), ParameterError);
  CHECK_THROWS_AS(fit_exponent(std::vector<std::pair<double, double>>{{-1, 1}, {2, 1}, {3, 1}}), ParameterError);
  CHECK_THROWS_AS(fit_exponent(std::vector<std::pair<double, double>>{{2, 1}, {2, 2}, {2, 3}}), ParameterError);
}

TEST_CASE("spec grammar") {
  CHECK(BranchLengthSequence::parse("power:0.5").kind() == SequenceKind::power_law);
  CHECK(BranchLengthSequence::parse("logpow:2").kind() == SequenceKind::log_power);
  CHECK(BranchLengthSequence::parse("spiked").kind() == SequenceKind::spiked);
  CHECK(BranchLengthSequence::parse("const:3").kind() == SequenceKind::constant);
  CHECK(BranchLengthSequence::parse("poisson:1", 3).is_random());
  auto list = BranchLengthSequence::parse("list:1,0.5,0.25");
  CHECK(list.max_terms() == 3u);
  CHECK(generate(list, 3)[2] == 0.25);
  CHECK_THROWS_AS(list.ensure(4), ParameterError);

  CHECK_THROWS_AS(BranchLengthSequence::parse("power:"), SpecError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("power:abc"), SpecError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("banana"), SpecError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("power:-1"), ParameterError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("power:0"), ParameterError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("poisson:1"), ParameterError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("list:1,-2"), ParameterError);
}

TEST_CASE("file sequences") {
  const auto good = temp_file("rtree_seq_good.txt", "1\n0.5\n\n0.25\n");
  auto seq = BranchLengthSequence::parse("file:" + good.string());
  CHECK(generate(seq, 3) == std::vector<double>{1.0, 0.5, 0.25});

  const auto bad = temp_file("rtree_seq_bad.txt", "1\n0.5\nx\n");
  try {
    BranchLengthSequence::parse("file:" + bad.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.row() == 3);
  }
  const auto negative = temp_file("rtree_seq_neg.txt", "1\n-0.5\n");
  CHECK_THROWS_AS(BranchLengthSequence::parse("file:" + negative.string()), FormatError);
  CHECK_THROWS_AS(BranchLengthSequence::parse("file:/nonexistent/rtree/seq.txt"), IoError);
}

TEST_CASE("boundedness warning") {
  auto tame = BranchLengthSequence::power_law(0.5);
  tame.ensure(64);
  CHECK_FALSE(tame.unbounded_warning(64));
  std::vector<double> values(64, 1.0);
  values[60] = 5.0;
  auto wild = BranchLengthSequence::explicit_list(values);
  wild.ensure(64);
  CHECK(wild.unbounded_warning(64));
  CHECK(wild.sup_a(64) == 5.0);
}
