#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rtree/diagnostics.hpp"
#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/sequences.hpp"

using namespace rtree;

namespace {

// Quadratic farthest-point traversal with the same first centre.
std::vector<std::size_t> brute_net_sizes(const Tree& tree, const std::vector<PointLocation>& pts,
                                         const std::vector<double>& eps) {
  std::vector<double> d(pts.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> out(eps.size(), 0);
  std::size_t centre = 0, count = 0;
  for (;;) {
    ++count;
    for (std::size_t k = 0; k < pts.size(); ++k) d[k] = std::min(d[k], distance(tree, pts[k], pts[centre]));
    const auto far = std::max_element(d.begin(), d.end());
    for (std::size_t e = 0; e < eps.size(); ++e) {
      if (out[e] == 0 && *far <= eps[e]) out[e] = count;
    }
    if (std::all_of(out.begin(), out.end(), [](std::size_t c) { return c > 0; })) return out;
    centre = static_cast<std::size_t>(far - d.begin());
  }
}

}  // namespace

TEST_CASE("urn simulation") {
  auto seq = BranchLengthSequence::power_law(0.5);
  Stream stream(1);
  SUBCASE("m0 = 1 is absorbing") {
    const auto t = urn_simulate(seq, 3, 1.0, 500, stream);
    for (double m : t.values) CHECK(m == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("each step takes one of the two admissible values") {
    const auto t = urn_simulate(seq, 5, 0.4, 2000, stream);
    CHECK(t.steps.front() == 5);
    CHECK(t.steps.back() == 2000);
    CHECK(urn_recursion_mismatch(seq, t) == 0.0);
    for (double m : t.values) CHECK((m > 0.0 && m <= 1.0));
  }
  SUBCASE("checkpoints") {
    const std::vector<std::size_t> cps{10, 50, 400};
    const auto t = urn_simulate(seq, 10, 0.3, 400, stream, cps);
    CHECK(t.steps == cps);
    const std::vector<std::size_t> bad{5};
    CHECK_THROWS_AS(urn_simulate(seq, 10, 0.3, 400, stream, bad), ParameterError);
    CHECK_THROWS_AS(urn_simulate(seq, 10, 0.0, 400, stream), ParameterError);
    CHECK_THROWS_AS(urn_simulate(seq, 10, 0.3, 5, stream), ParameterError);
  }
  SUBCASE("martingale mean") {
    const std::vector<std::size_t> cps{100, 1000};
    std::vector<RunningStats> s(2);
    for (std::uint64_t r = 0; r < 20'000; ++r) {
      Stream st = Stream::for_replicate(2, r);
      const auto t = urn_simulate(seq, 10, 0.3, 1000, st, cps);
      s[0].add(t.values[0]);
      s[1].add(t.values[1]);
    }
    for (const auto& x : s) CHECK(std::fabs(x.mean() - 0.3) <= 3.0 * x.stderr_mean());
  }
}

TEST_CASE("tracked mass") {
  auto seq = BranchLengthSequence::power_law(0.5);
  SUBCASE("builds the same tree as build_tree") {
    const auto tracked = track_mass(seq, 800, 4, 1, MassRegion::whole_tree(seq, 1));
    const Tree tree = build_tree(seq, 800, 4);
    for (std::size_t b = 1; b <= 800; ++b) {
      REQUIRE(tracked.tree.parent(b) == tree.parent(b));
      REQUIRE(tracked.tree.attach_offset(b) == tree.attach_offset(b));
    }
  }
  SUBCASE("the whole of T_i0 keeps mass one") {
    const auto tracked = track_mass(seq, 500, 5, 20, MassRegion::whole_tree(seq, 20));
    for (double m : tracked.trajectory.values) CHECK(m == doctest::Approx(1.0).epsilon(1e-13));
  }
  SUBCASE("half of branch 1 follows the recursion and matches subtree_length") {
    MassRegion half;
    half.intervals.push_back({1, 0.0, 0.5});
    const auto tracked = track_mass(seq, 1000, 6, 1, half);
    CHECK(tracked.trajectory.values.front() == 0.5);
    CHECK(urn_recursion_mismatch(seq, tracked.trajectory) <= 1e-10);
    for (std::size_t t : {1UL, 10UL, 300UL, 1000UL}) {
      const double direct = subtree_length(tracked.tree, 1, {1, 0.0, 0.5}, t) / seq.A(t);
      CHECK(tracked.trajectory.values[t - 1] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  SUBCASE("invalid regions") {
    MassRegion outside;
    outside.intervals.push_back({3, 0.0, 0.1});
    CHECK_THROWS_AS(track_mass(seq, 100, 1, 2, outside), LocationError);
    MassRegion overlap;
    overlap.intervals.push_back({1, 0.0, 0.5});
    overlap.intervals.push_back({1, 0.4, 0.6});
    CHECK_THROWS_AS(track_mass(seq, 100, 1, 2, overlap), LocationError);
    CHECK_THROWS_AS(track_mass(seq, 100, 1, 2, MassRegion{}), LocationError);
  }
  SUBCASE("tree dynamics and the urn agree in law") {
    constexpr std::size_t runs = 1000;
    const std::vector<std::size_t> cps{1000};
    MassRegion half;
    half.intervals.push_back({1, 0.0, 0.5});
    std::vector<double> from_trees(runs), from_urn(runs);
    parallel_for(runs, [&](std::size_t r) {
      from_trees[r] = track_mass(seq, 1000, derive_stream_seed(7, r), 1, half, cps).trajectory.values[0];
      Stream st = Stream::for_replicate(8, r);
      from_urn[r] = urn_simulate(seq, 1, 0.5, 1000, st, cps).values[0];
    });
    CHECK(ks_statistic(from_trees, from_urn) < ks_critical(runs, runs));
  }
}

TEST_CASE("projected total variation") {
  auto seq = BranchLengthSequence::power_law(0.5);
  CHECK(lp_projected_distance(seq, 2000, 2000, 100, 16, 1) == 0.0);
  // A single piece carries all the mass at both times, up to rounding.
  CHECK(lp_projected_distance(seq, 2000, 1000, 100, 1, 1) <= 1e-12);
  const double d = lp_projected_distance(seq, 2000, 1000, 100, 16, 1);
  CHECK(d > 0.0);
  CHECK(d < 1.0);
  CHECK_THROWS_AS(lp_projected_distance(seq, 2000, 50, 100, 16, 1), ParameterError);

  // The medians over seeds shrink as m grows (n = 2m).
  double previous = 1.0;
  for (std::size_t m = 1 << 10; m <= (1 << 14); m <<= 1) {
    std::vector<double> v(20);
    for (std::size_t s = 0; s < 20; ++s) v[s] = lp_projected_distance(seq, 2 * m, m, 100, 16, derive_stream_seed(9, s));
    std::sort(v.begin(), v.end());
    const double median = 0.5 * (v[9] + v[10]);
    CHECK(median <= previous);
    previous = median;
  }
}

TEST_CASE("covering profile") {
  auto seq = BranchLengthSequence::power_law(2.0);
  const Tree tree = build_tree(seq, 5000, 3);
  CHECK(covering_profile(tree, 5000).entries.empty());
  for (std::size_t m : {1UL, 10UL, 200UL}) {
    const auto profile = covering_profile(tree, m);
    CompensatedSum total;
    std::vector<int> seen(tree.size() + 1, 0);
    for (std::size_t e = 0; e < profile.entries.size(); ++e) {
      const auto& entry = profile.entries[e];
      total += entry.length;
      if (e > 0) {
        const auto& prev = profile.entries[e - 1].root;
        CHECK((prev.branch < entry.root.branch ||
               (prev.branch == entry.root.branch && prev.offset < entry.root.offset)));
      }
      double height = 0.0;
      for (auto b : entry.branches) {
        ++seen[b];
        height = std::max(height, distance(tree, entry.root, {b, tree.length(b)}));
      }
      CHECK(entry.height == doctest::Approx(height).epsilon(1e-12));
      CHECK(entry.height <= tree.total_length() - tree.length_prefix(m) + 1e-12);
    }
    CHECK(total.value() == doctest::Approx(tree.total_length() - tree.length_prefix(m)).epsilon(1e-12));
    for (std::size_t b = 1; b <= tree.size(); ++b) CHECK(seen[b] == (b > m ? 1 : 0));
  }
}

TEST_CASE("net sizes match a quadratic farthest-point traversal") {
  auto seq = BranchLengthSequence::power_law(0.5);
  const std::vector<double> eps{1.0, 0.5, 0.25, 0.1, 0.05};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tree tree = build_tree(seq, 300, seed);
    Stream stream(seed + 50);
    std::vector<PointLocation> pts(600);
    for (auto& p : pts) p = sample_uniform(tree, stream);
    CHECK(net_sizes(tree, pts, eps) == brute_net_sizes(tree, pts, eps));
  }
}

TEST_CASE("box dimension") {
  auto segment = BranchLengthSequence::parse("list:1");
  const std::vector<std::size_t> one{1};
  const std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
  const auto box = box_dimension(segment, one, eps, 2, 1, 20'000);
  CHECK(box.slope >= 0.9);
  CHECK(box.slope <= 1.1);
  CHECK(box.table.size() == 8);
  CHECK_FALSE(box.sample_limited);
  const std::vector<double> flat{0.1, 0.1, 0.1};
  CHECK_THROWS_AS(box_dimension(segment, one, flat, 1, 1, 100), ParameterError);
  const auto limited = box_dimension(segment, one, eps, 1, 1, 100);
  CHECK(limited.sample_limited);
}

TEST_CASE("good branches") {
  auto seq = BranchLengthSequence::power_law(1.5);
  CHECK(good_branch_stats(seq, 100, 1.5, 0.1).count == 101);
  CHECK(good_branch_stats(seq, 100, 1.5, 0.0).count == 101);
  CHECK(good_branch_stats(seq, 100, 1.4, 0.0).count == 0);
  auto two = BranchLengthSequence::power_law(2.0);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t n = 64; n <= (1 << 16); n <<= 1) {
    const auto g = good_branch_stats(two, n, 2.0, 0.05);
    double direct = 0.0;
    for (std::size_t i = n; i <= 2 * n; ++i) direct += 1.0 / (static_cast<double>(i) * i);
    CHECK(g.length == doctest::Approx(direct).epsilon(1e-12));
    pairs.emplace_back(static_cast<double>(n), g.length);
  }
  const double slope = fit_exponent(pairs).slope;
  CHECK(slope >= -1.2);
  CHECK(slope <= -0.8);
}

TEST_CASE("boundedness probes") {
  const std::vector<std::size_t> grid{1 << 8, 1 << 10, 1 << 12, 1 << 14};
  SUBCASE("alpha = 2 stays below pi^2 / 6") {
    auto seq = BranchLengthSequence::power_law(2.0);
    const auto curve = boundedness_probe(seq, grid, 4, 1);
    CHECK(curve.table.size() == 16);
    for (const auto& row : curve.table) CHECK(row.value <= std::numbers::pi * std::numbers::pi / 6.0);
  }
  SUBCASE("prefix heights agree with separately built trees") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const auto curve = boundedness_probe(seq, grid, 2, 3);
    for (const auto& row : curve.table) {
      const Tree tree = build_tree(seq, row.n, derive_stream_seed(3, row.replicate));
      CHECK(row.value == max_height(tree));
    }
  }
  SUBCASE("spiked and constant sequences keep growing") {
    auto spiked = BranchLengthSequence::spiked();
    CHECK(boundedness_probe(spiked, grid, 4, 2).fit.slope > 0.0);
    auto flat = BranchLengthSequence::constant(1.0);
    CHECK(boundedness_probe(flat, grid, 4, 2).fit.slope > 0.0);
  }
  SUBCASE("longest stem shrinks for alpha = 1/2") {
    auto seq = BranchLengthSequence::power_law(0.5);
    const auto curve = longest_stem_scaling(seq, grid, 10, 4);
    CHECK(curve.fit.slope < 0.0);
    const std::vector<std::size_t> short_grid{10, 20};
    CHECK_THROWS_AS(longest_stem_scaling(seq, short_grid, 2, 1), ParameterError);
  }
}
