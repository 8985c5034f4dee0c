#include "rtree/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "rtree/diagnostics.hpp"
#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/records.hpp"
#include "rtree/sequences.hpp"
#include "rtree/tracked_point.hpp"
#include "rtree/tree.hpp"
#include "rtree/two_point.hpp"

namespace rtree {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20240531;

// Sample sizes of the Monte Carlo and dimension criteria.
constexpr std::size_t kHeightDraws = 1'000'000;
constexpr std::size_t kMgfDraws = 1'000'000;
constexpr std::size_t kTwoPointSamples = 10'000;
constexpr std::size_t kUrnTrajectories = 100'000;
constexpr std::size_t kFreezeRuns = 10'000;
constexpr std::size_t kTailSamples = 1'000'000;
constexpr std::size_t kTailK = std::size_t{1} << 18;
constexpr std::size_t kBoxSamples = 200'000;
constexpr std::size_t kBoxSeeds = 5;
constexpr std::size_t kChunks = 64;

std::string kv(const char* key, double v) { return std::string(key) + "=" + format_real(v) + " "; }

// Mean of f(stream) over `total` draws split into kChunks independent replicate streams.
RunningStats chunked_mean(std::size_t total, std::uint64_t seed, const std::function<double(Stream&)>& f) {
  std::vector<RunningStats> parts(kChunks);
  parallel_for(kChunks, [&](std::size_t c) {
    Stream stream = Stream::for_replicate(seed, c);
    const std::size_t count = total / kChunks + (c < total % kChunks ? 1 : 0);
    for (std::size_t k = 0; k < count; ++k) parts[c].add(f(stream));
  });
  RunningStats all;
  for (const auto& p : parts) all.merge(p);
  return all;
}

std::vector<BranchLengthSequence> families() {
  std::vector<BranchLengthSequence> out;
  out.push_back(BranchLengthSequence::power_law(0.5));
  out.push_back(BranchLengthSequence::poisson_intervals(1.0, kSeed));
  out.push_back(BranchLengthSequence::log_power(2.0));
  out.push_back(BranchLengthSequence::spiked());
  return out;
}

CriterionResult weights_normalization() {
  CriterionResult r{1, "mixture weights sum to one", false, 0.0, 1e-12, "", 0.0};
  double worst = 0.0;
  for (auto& seq : families()) {
    for (std::size_t K : {1UL, 10UL, 1000UL, 100'000UL}) {
      const TwoPointLaw law(seq, K);
      CompensatedSum s;
      for (double w : law.weights()) s += w;
      worst = std::max(worst, std::fabs(s.value() - 1.0));
    }
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = "families=4 K=1,10,1000,100000";
  return r;
}

CriterionResult mgf_bound() {
  CriterionResult r{2, "MGF below exp(lambda H)", false, 0.0, 1e-12, "", 0.0};
  constexpr std::size_t n = 10'000;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  bool ok = true;
  for (double alpha : {0.3, 0.5, 0.8, 2.0}) {
    auto seq = BranchLengthSequence::power_law(alpha);
    seq.ensure(n);
    const double lambda_max = 1.0 / seq.sup_a(n);
    for (int k = 0; k <= 10; ++k) {
      const auto check = exp_bound_check(seq, n, lambda_max * k / 10.0);
      ok = ok && check.ok;
      worst = std::max(worst, check.mgf.value - check.bound);
      ++checked;
    }
  }
  r.measured = worst;
  r.pass = ok && worst <= r.threshold;
  r.detail = "checks=" + std::to_string(checked) + " max(mgf-bound) reported";
  return r;
}

CriterionResult tree_metric() {
  CriterionResult r{3, "four-point condition and triangle inequality", false, 0.0, 1e-9, "", 0.0};
  auto seq = BranchLengthSequence::power_law(0.5);
  const Tree tree = build_tree(seq, 10'000, kSeed);
  Stream stream(kSeed + 3);
  double worst_triangle = 0.0;
  double worst_four = 0.0;
  double worst_symmetry = 0.0;
  for (int k = 0; k < 10'000; ++k) {
    const auto p = sample_uniform(tree, stream);
    const auto q = sample_uniform(tree, stream);
    const auto s = sample_uniform(tree, stream);
    const auto t = sample_uniform(tree, stream);
    const double pq = distance(tree, p, q);
    const double qs = distance(tree, q, s);
    const double ps = distance(tree, p, s);
    worst_triangle = std::max(worst_triangle, ps - (pq + qs));
    worst_symmetry = std::max(worst_symmetry, std::fabs(pq - distance(tree, q, p)));
    double sums[3] = {pq + distance(tree, s, t), ps + distance(tree, q, t), distance(tree, p, t) + qs};
    std::sort(sums, sums + 3);
    worst_four = std::max(worst_four, sums[2] - sums[1]);
  }
  r.measured = std::max({worst_triangle, worst_four, worst_symmetry});
  r.pass = r.measured <= r.threshold && worst_symmetry == 0.0;
  r.detail = kv("triangle", worst_triangle) + kv("four_point", worst_four) + kv("symmetry", worst_symmetry);
  return r;
}

CriterionResult covering_partition() {
  CriterionResult r{4, "covering profile partitions T_n minus T_m", false, 0.0, 1e-9, "", 0.0};
  double worst = 0.0;
  bool each_once = true;
  for (double alpha : {0.5, 2.0}) {
    auto seq = BranchLengthSequence::power_law(alpha);
    const Tree tree = build_tree(seq, 10'000, kSeed + 4);
    for (std::size_t m : {1UL, 10UL, 100UL, 1000UL, 9999UL, 10'000UL}) {
      const auto profile = covering_profile(tree, m);
      CompensatedSum total;
      std::vector<int> seen(tree.size() + 1, 0);
      for (const auto& e : profile.entries) {
        total += e.length;
        for (auto b : e.branches) ++seen[b];
      }
      worst = std::max(worst, std::fabs(total.value() - (tree.length_prefix(tree.size()) - tree.length_prefix(m))));
      for (std::size_t b = 1; b <= tree.size(); ++b) each_once = each_once && seen[b] == (b > m ? 1 : 0);
    }
  }
  r.measured = worst;
  r.pass = worst <= r.threshold && each_once;
  r.detail = std::string("every_branch_once=") + (each_once ? "yes" : "no");
  return r;
}

CriterionResult mass_recursion() {
  CriterionResult r{5, "tracked mass follows the urn recursion", false, 0.0, 1e-10, "", 0.0};
  double worst = 0.0;
  auto seq = BranchLengthSequence::power_law(0.5);
  seq.ensure(1000);
  for (std::uint64_t s = 0; s < 20; ++s) {
    MassRegion half;
    half.intervals.push_back({1, 0.0, 0.5 * seq.a(1)});
    auto tracked = track_mass(seq, 1000, derive_stream_seed(kSeed, s), 1, half);
    worst = std::max(worst, urn_recursion_mismatch(seq, tracked.trajectory));
    MassRegion pieces;
    pieces.intervals.push_back({2, 0.1 * seq.a(2), 0.4 * seq.a(2)});
    pieces.intervals.push_back({4, 0.0, seq.a(4)});
    tracked = track_mass(seq, 1000, derive_stream_seed(kSeed, s + 100), 5, pieces);
    worst = std::max(worst, urn_recursion_mismatch(seq, tracked.trajectory));
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  r.detail = "runs=40 n=1000";
  return r;
}

CriterionResult height_mean() {
  CriterionResult r{6, "typical height mean equals H/2", false, 0.0, 3.0, "", 0.0};
  constexpr std::size_t n = 100'000;
  auto seq = BranchLengthSequence::power_law(0.5);
  const HeightLawSampler sampler(seq, n);
  const auto stats = chunked_mean(kHeightDraws, kSeed + 6, [&](Stream& s) { return sampler.draw(s); });
  const double exact = 0.5 * h_of_a(seq, n);
  r.measured = std::fabs(stats.mean() - exact) / stats.stderr_mean();
  r.pass = r.measured <= r.threshold;
  r.detail = kv("mean", stats.mean()) + kv("exact", exact) + kv("stderr", stats.stderr_mean());
  return r;
}

CriterionResult mgf_monte_carlo() {
  CriterionResult r{7, "MGF Monte Carlo matches the exact product", false, 0.0, 3.0, "", 0.0};
  constexpr std::size_t n = 1000;
  auto seq = BranchLengthSequence::power_law(0.5);
  const HeightLawSampler sampler(seq, n);
  const double lambda = 0.5 / seq.sup_a(n);
  const auto stats =
      chunked_mean(kMgfDraws, kSeed + 7, [&](Stream& s) { return std::exp(lambda * sampler.draw(s)); });
  const double exact = height_mgf(seq, n, lambda).value;
  r.measured = std::fabs(stats.mean() - exact) / stats.stderr_mean();
  r.pass = r.measured <= r.threshold;
  r.detail = kv("mc", stats.mean()) + kv("exact", exact) + kv("stderr", stats.stderr_mean());
  return r;
}

CriterionResult two_point_equivalence() {
  CriterionResult r{8, "two-point law matches distances on built trees", false, 0.0, 0.0, "", 0.0};
  constexpr std::size_t n = 10'000;
  auto seq = BranchLengthSequence::power_law(0.5);
  const TwoPointLaw law(seq, n);
  r.threshold = ks_critical(kTwoPointSamples, kTwoPointSamples);
  int passes = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    std::vector<double> from_law(kTwoPointSamples);
    Stream stream = Stream::for_replicate(kSeed + 8, s);
    for (auto& d : from_law) d = law.sample(stream);
    auto from_trees = annealed_empirical_D(seq, n, kTwoPointSamples, 1, derive_stream_seed(kSeed + 80, s));
    const double ks = ks_statistic(std::move(from_law), std::move(from_trees));
    r.detail += "ks" + std::to_string(s) + "=" + format_real(ks) + " ";
    worst = std::max(worst, ks);
    if (ks <= r.threshold) ++passes;
  }
  r.measured = worst;
  r.pass = passes >= 3;
  r.detail += "passing_seeds=" + std::to_string(passes) + "/5";
  return r;
}

CriterionResult urn_martingale() {
  CriterionResult r{9, "urn mass is a martingale", false, 0.0, 3.0, "", 0.0};
  auto seq = BranchLengthSequence::power_law(0.5);
  seq.ensure(10'000);
  const std::vector<std::size_t> checkpoints{100, 1000, 10'000};
  std::vector<std::vector<double>> values(kUrnTrajectories);
  parallel_for(kUrnTrajectories, [&](std::size_t t) {
    Stream stream = Stream::for_replicate(kSeed + 9, t);
    values[t] = urn_simulate(seq, 10, 0.3, 10'000, stream, checkpoints).values;
  });
  double worst = 0.0;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    RunningStats s;
    for (const auto& v : values) s.add(v[k]);
    const double z = std::fabs(s.mean() - 0.3) / s.stderr_mean();
    worst = std::max(worst, z);
    r.detail += "mean@" + std::to_string(checkpoints[k]) + "=" + format_real(s.mean()) + " ";
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  return r;
}

CriterionResult freezing_probability() {
  CriterionResult r{10, "tracked point freezes with probability A_n0/A_N", false, 0.0, 3.0, "", 0.0};
  constexpr std::size_t n0 = 100;
  constexpr std::size_t N = 100'000;
  auto seq = BranchLengthSequence::power_law(2.0);
  seq.ensure(N);
  std::vector<char> frozen(kFreezeRuns, 0);
  parallel_for(kFreezeRuns, [&](std::size_t k) {
    const auto build = build_with_tracked_point(seq, N, derive_stream_seed(kSeed + 10, k), 16);
    frozen[k] = frozen_after(build, n0) ? 1 : 0;
  });
  const double p = seq.A(n0) / seq.A(N);
  const double fraction = static_cast<double>(std::count(frozen.begin(), frozen.end(), 1)) / kFreezeRuns;
  const double sigma = std::sqrt(p * (1.0 - p) / kFreezeRuns);
  r.measured = std::fabs(fraction - p) / sigma;
  r.pass = r.measured <= r.threshold;
  r.detail = kv("fraction", fraction) + kv("expected", p) + "runs=" + std::to_string(kFreezeRuns);
  return r;
}

CriterionResult tail_exponents() {
  CriterionResult r{11, "two-point tail exponent near 1/alpha", false, 0.0, 0.0, "", 0.0};
  std::vector<double> grid;
  for (int k = 2; k <= 7; ++k) grid.push_back(std::ldexp(1.0, -k));
  struct Case {
    double alpha, lo, hi;
  };
  bool ok = true;
  for (const Case c : {Case{0.5, 1.6, 2.4}, Case{0.75, 1.0, 1.7}}) {
    auto seq = BranchLengthSequence::power_law(c.alpha);
    const TwoPointLaw law(seq, kTailK);
    std::vector<double> samples(kTailSamples);
    parallel_for(kChunks, [&](std::size_t chunk) {
      Stream stream = Stream::for_replicate(kSeed + 11, chunk);
      for (std::size_t k = chunk; k < kTailSamples; k += kChunks) samples[k] = law.sample(stream);
    });
    const auto tail = tail_exponent_from_samples(samples, grid);
    const bool in = tail.fit.slope >= c.lo && tail.fit.slope <= c.hi;
    ok = ok && in;
    if (c.alpha == 0.5) r.measured = tail.fit.slope;
    r.detail += "alpha=" + format_real(c.alpha) + ":slope=" + format_real(tail.fit.slope) + ":window=[" +
                format_real(c.lo) + "," + format_real(c.hi) + "]:min_count=" +
                std::to_string(tail.counts.back()) + " ";
  }
  r.threshold = 2.0;
  r.pass = ok;
  return r;
}

CriterionResult box_dimensions() {
  CriterionResult r{12, "box-counting slopes", false, 0.0, 2.0, "", 0.0};
  const std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625};
  struct Case {
    std::string spec;
    std::size_t n;
    double lo, hi;
  };
  bool ok = true;
  for (const Case& c : {Case{"power:0.5", 1'000'000, 1.6, 2.4}, Case{"power:2", 1'000'000, 0.8, 1.2},
                        Case{"list:1", 1, 0.9, 1.1}}) {
    auto seq = BranchLengthSequence::parse(c.spec);
    const std::size_t n_grid[] = {c.n};
    const auto box = box_dimension(seq, n_grid, eps, kBoxSeeds, kSeed + 12, kBoxSamples);
    const bool in = box.slope >= c.lo && box.slope <= c.hi;
    ok = ok && in;
    if (c.spec == "power:0.5") r.measured = box.slope;
    std::size_t max_count = 0;
    for (const auto& row : box.table) max_count = std::max(max_count, row.count);
    r.detail += c.spec + ":slope=" + format_real(box.slope) + ":window=[" + format_real(c.lo) + "," +
                format_real(c.hi) + "]:max_N=" + std::to_string(max_count) +
                (box.sample_limited ? ":sample_limited" : "") + " ";
  }
  r.pass = ok;
  return r;
}

CriterionResult stem_scaling() {
  CriterionResult r{13, "longest stem exponent", false, 0.0, -0.5, "", 0.0};
  auto seq = BranchLengthSequence::power_law(0.5);
  std::vector<std::size_t> grid;
  for (int k = 8; k <= 15; ++k) grid.push_back(std::size_t{1} << k);
  const auto curve = longest_stem_scaling(seq, grid, 20, kSeed + 13);
  r.measured = curve.fit.slope;
  r.pass = r.measured >= -0.7 && r.measured <= -0.3;
  r.detail = kv("stderr", curve.fit.stderr_slope) + "window=[-0.7,-0.3] seeds=20";
  return r;
}

CriterionResult good_branch_scaling() {
  CriterionResult r{14, "good-branch length exponent near 1 - alpha", false, 0.0, 0.2, "", 0.0};
  double worst = 0.0;
  for (double alpha : {1.5, 2.0}) {
    auto seq = BranchLengthSequence::power_law(alpha);
    std::vector<std::pair<double, double>> pairs;
    for (int k = 6; k <= 16; ++k) {
      const std::size_t n = std::size_t{1} << k;
      pairs.emplace_back(static_cast<double>(n), good_branch_stats(seq, n, alpha, 0.05).length);
    }
    const auto fit = fit_exponent(pairs);
    worst = std::max(worst, std::fabs(fit.slope - (1.0 - alpha)));
    r.detail += "alpha=" + format_real(alpha) + ":slope=" + format_real(fit.slope) + " ";
  }
  r.measured = worst;
  r.pass = worst <= r.threshold;
  return r;
}

using CriterionFn = CriterionResult (*)();

constexpr CriterionFn kCriteria[] = {
    weights_normalization, mgf_bound,      tree_metric,     covering_partition,    mass_recursion,
    height_mean,           mgf_monte_carlo, two_point_equivalence, urn_martingale, freezing_probability,
    tail_exponents,        box_dimensions, stem_scaling,    good_branch_scaling,
};

struct SuiteRange {
  const char* name;
  int first, last;
};

constexpr SuiteRange kSuites[] = {{"exact", 1, 5}, {"montecarlo", 6, 10}, {"dimension", 11, 14}};

}  // namespace

bool SuiteReport::all_pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"exact", "montecarlo", "dimension"};
  return names;
}

CriterionResult run_criterion(int id) {
  if (id < 1 || id > static_cast<int>(std::size(kCriteria))) throw UsageError("no criterion " + std::to_string(id));
  const auto start = Clock::now();
  CriterionResult r = kCriteria[id - 1]();
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

SuiteReport run_suite(std::string_view suite) {
  for (const auto& s : kSuites) {
    if (suite != s.name) continue;
    SuiteReport report;
    report.suite = s.name;
    const auto start = Clock::now();
    for (int id = s.first; id <= s.last; ++id) report.criteria.push_back(run_criterion(id));
    report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return report;
  }
  throw UsageError("unknown suite '" + std::string(suite) + "' (expected exact, montecarlo or dimension)");
}

std::string format_criterion(std::string_view suite, const CriterionResult& c) {
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.2f", c.seconds);
  std::string line = "suite=" + std::string(suite) + " criterion=" + std::to_string(c.id) +
                     " result=" + (c.pass ? "PASS" : "FAIL") + " measured=" + format_real(c.measured) +
                     " threshold=" + format_real(c.threshold) + " seconds=" + timing + " name=\"" + c.name + "\"";
  if (!c.detail.empty()) {
    std::string detail = c.detail;
    while (!detail.empty() && detail.back() == ' ') detail.pop_back();
    line += " detail=\"" + detail + "\"";
  }
  return line;
}

void print_report(const SuiteReport& report, std::ostream& out) {
  std::size_t passed = 0;
  for (const auto& c : report.criteria) {
    out << format_criterion(report.suite, c) << '\n';
    if (c.pass) ++passed;
  }
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.2f", report.seconds);
  out << "suite=" << report.suite << " passed=" << passed << '/' << report.criteria.size()
      << " seconds=" << timing << '\n';
}

}  // namespace rtree
