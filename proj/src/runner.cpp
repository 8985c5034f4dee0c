#include "rtree/runner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rtree/diagnostics.hpp"
#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"
#include "rtree/sequences.hpp"
#include "rtree/tracked_point.hpp"
#include "rtree/tree.hpp"
#include "rtree/two_point.hpp"

namespace rtree {

namespace {

class Rows {
 public:
  explicit Rows(const ExperimentConfig& c, std::string sequence)
      : config_(c), id_(fingerprint(c.canonical())), sequence_(std::move(sequence)) {}

  ResultRecord& add(std::optional<std::uint64_t> replicate, std::uint64_t n, std::string statistic, double value) {
    ResultRecord r;
    r.experiment_id = id_;
    r.command = std::string(command_name(config_.command));
    r.sequence = sequence_;
    r.seed = config_.seed;
    r.replicate = replicate;
    r.n = n;
    r.statistic = std::move(statistic);
    r.value = value;
    rows_.push_back(std::move(r));
    return rows_.back();
  }

  ResultRecord& summary(std::uint64_t n, std::string statistic, double value) {
    return add(std::nullopt, n, std::move(statistic), value);
  }

  std::vector<ResultRecord> take() { return std::move(rows_); }

 private:
  const ExperimentConfig& config_;
  std::string id_;
  std::string sequence_;
  std::vector<ResultRecord> rows_;
};

void add_mean(Rows& rows, std::uint64_t n, const char* name, const RunningStats& s) {
  rows.summary(n, name, s.mean()).std_error = s.stderr_mean();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string eps_label(double eps) { return "N(eps=" + format_real(eps) + ")"; }

void run_gen(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  const auto a = generate(seq, c.n);
  for (std::size_t i = 1; i <= c.n; ++i) rows.add(std::nullopt, i, "a", a[i - 1]);
  const auto d = series_diagnostics(seq, c.n);
  rows.summary(c.n, "A", d.sum_a);
  rows.summary(c.n, "h_of_a", h_of_a(seq, c.n));
  rows.summary(c.n, "sum_a_over_A2", d.sum_a_over_A2);
  rows.summary(c.n, "sum_ratio_sq", d.sum_ratio_sq);
  rows.summary(c.n, "sup_a", d.sup_a);
  rows.summary(c.n, "inc_a_over_A2", d.inc_a_over_A2);
  rows.summary(c.n, "inc_ratio_sq", d.inc_ratio_sq);
  rows.summary(c.n, "inc_sum_a", d.inc_sum_a);
  rows.summary(c.n, "unbounded_warning", seq.unbounded_warning(c.n) ? 1.0 : 0.0);
}

void run_build(const ExperimentConfig& c, BranchLengthSequence* seq, Rows& rows) {
  const Tree tree = c.import_path ? import_tree(*c.import_path) : build_tree(*seq, c.n, c.seed);
  if (c.out) export_tree(tree, *c.out);
  const std::size_t n = tree.size();
  CompensatedSum mean_height;
  std::size_t leaves = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    mean_height += tree.length(i) / tree.total_length() * (tree.attach_height(i) + 0.5 * tree.length(i));
    if (tree.children(i).empty()) ++leaves;
  }
  rows.summary(n, "total_length", tree.total_length());
  rows.summary(n, "max_height", max_height(tree));
  rows.summary(n, "longest_stem", longest_stem(tree));
  rows.summary(n, "mean_point_height", mean_height.value());
  rows.summary(n, "childless_branches", static_cast<double>(leaves));
}

void run_height(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  const HeightLawSampler sampler =
      c.n_infinite ? HeightLawSampler::for_limit(seq, c.tolerance) : HeightLawSampler(seq, c.n);
  const std::size_t n = sampler.n();
  std::vector<double> values(c.reps);
  parallel_for(c.reps, [&](std::size_t r) {
    Stream stream = Stream::for_replicate(c.seed, r);
    values[r] = sampler.draw(stream);
  });
  const double trunc = sampler.truncation_error();
  RunningStats stats;
  for (std::size_t r = 0; r < c.reps; ++r) {
    auto& row = rows.add(r, n, "height", values[r]);
    if (c.n_infinite) row.truncation_error = trunc;
    stats.add(values[r]);
  }
  add_mean(rows, n, "mean", stats);
  auto& exact = rows.summary(n, "exact_mean", 0.5 * h_of_a(seq, n));
  if (c.n_infinite) exact.truncation_error = trunc;
  if (c.lambda >= 0.0) {
    RunningStats mgf;
    for (double h : values) mgf.add(std::exp(c.lambda * h));
    add_mean(rows, n, "mgf_mc", mgf);
    const MgfValue exact_mgf = height_mgf(seq, n, c.lambda);
    rows.summary(n, "mgf_exact", exact_mgf.value);
    rows.summary(n, "log_mgf_exact", exact_mgf.log_value);
    if (c.lambda <= 1.0 / seq.sup_a(n)) {
      const auto check = exp_bound_check(seq, n, c.lambda);
      rows.summary(n, "mgf_bound", check.bound);
      rows.summary(n, "mgf_bound_ok", check.ok ? 1.0 : 0.0);
    }
  }
}

void run_twopoint(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  std::vector<double> values;
  std::optional<TwoPointLaw> law;
  if (c.source == "tree") {
    if (c.n_infinite) throw ParameterError("source=tree needs a finite n");
    values = annealed_empirical_D(seq, c.n, c.reps, 1, c.seed);
    law.emplace(seq, c.n);
  } else {
    law.emplace(c.n_infinite ? TwoPointLaw::for_limit(seq, c.tolerance)
                             : TwoPointLaw(seq, c.K ? c.K : c.n));
    values.resize(c.reps);
    parallel_for(c.reps, [&](std::size_t r) {
      Stream stream = Stream::for_replicate(c.seed, r);
      values[r] = law->sample(stream);
    });
  }
  const std::size_t n = law->K();
  const bool from_law = c.source == "law";
  RunningStats stats;
  for (std::size_t r = 0; r < values.size(); ++r) {
    auto& row = rows.add(r, n, "D", values[r]);
    if (from_law) row.truncation_error = law->tail_mean_budget();
    stats.add(values[r]);
  }
  add_mean(rows, n, "mean", stats);
  auto& exact = rows.summary(n, "exact_mean", law->exact_mean());
  if (from_law) exact.truncation_error = law->tail_mean_budget();
  if (!c.r_grid.empty()) {
    const TailExponent tail = tail_exponent_from_samples(values, c.r_grid);
    for (std::size_t k = 0; k < tail.r.size(); ++k) {
      rows.summary(n, "P(D<=" + format_real(tail.r[k]) + ")",
                   static_cast<double>(tail.counts[k]) / static_cast<double>(tail.m));
    }
    rows.summary(n, "tail_slope", tail.fit.slope).std_error = tail.fit.stderr_slope;
    rows.summary(n, "tail_low_counts", tail.low_counts ? 1.0 : 0.0);
  }
}

void run_dimension(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  const BoxDimension box = box_dimension(seq, c.n_grid, c.eps_grid, c.reps, c.seed, c.samples);
  auto table = box.table;
  std::stable_sort(table.begin(), table.end(), [](const BoxDimensionRow& a, const BoxDimensionRow& b) {
    return a.replicate < b.replicate;
  });
  for (const auto& row : table) rows.add(row.replicate, row.n, eps_label(row.eps), static_cast<double>(row.count));
  const std::size_t n_max = c.n_grid.back();
  rows.summary(n_max, "box_slope", box.slope).std_error = box.std_error;
  rows.summary(n_max, "sample_limited", box.sample_limited ? 1.0 : 0.0);
}

void run_martingale(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  seq.ensure(c.n);
  std::vector<UrnTrajectory> runs(c.reps);
  if (c.source == "tree") {
    MassRegion region;
    region.intervals.push_back({1, 0.0, c.m0 * seq.a(1)});
    parallel_for(c.reps, [&](std::size_t r) {
      runs[r] = track_mass(seq, c.n, derive_stream_seed(c.seed, r), c.i0, region, c.checkpoints).trajectory;
    });
  } else {
    parallel_for(c.reps, [&](std::size_t r) {
      Stream stream = Stream::for_replicate(c.seed, r);
      runs[r] = urn_simulate(seq, c.i0, c.m0, c.n, stream, c.checkpoints);
    });
  }
  std::vector<RunningStats> stats(c.checkpoints.size());
  for (std::size_t r = 0; r < c.reps; ++r) {
    for (std::size_t k = 0; k < runs[r].steps.size(); ++k) {
      rows.add(r, runs[r].steps[k], "M", runs[r].values[k]);
      stats[k].add(runs[r].values[k]);
    }
  }
  for (std::size_t k = 0; k < c.checkpoints.size(); ++k) add_mean(rows, c.checkpoints[k], "mean_M", stats[k]);
}

void run_lp(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  seq.ensure(c.n);
  std::vector<double> values(c.reps);
  parallel_for(c.reps, [&](std::size_t r) {
    values[r] = lp_projected_distance(seq, c.n, c.m, c.n0, c.parts, derive_stream_seed(c.seed, r));
  });
  RunningStats stats;
  for (std::size_t r = 0; r < c.reps; ++r) {
    rows.add(r, c.n, "projected_tv", values[r]);
    stats.add(values[r]);
  }
  add_mean(rows, c.n, "mean", stats);
  rows.summary(c.n, "median", median(values));
}

void run_probe(const ExperimentConfig& c, BranchLengthSequence& seq, Rows& rows) {
  if (c.metric == "good_length") {
    std::vector<std::pair<double, double>> pairs;
    for (auto n : c.n_grid) {
      const auto g = good_branch_stats(seq, n, c.alpha, c.eps);
      rows.add(std::nullopt, n, "good_count", static_cast<double>(g.count));
      rows.add(std::nullopt, n, "good_length", g.length);
      pairs.emplace_back(static_cast<double>(n), g.length);
    }
    const auto fit = fit_exponent(pairs);
    rows.summary(c.n_grid.back(), "slope", fit.slope).std_error = fit.stderr_slope;
    return;
  }
  const GrowthCurve curve = c.metric == "max_height" ? boundedness_probe(seq, c.n_grid, c.reps, c.seed)
                                                     : longest_stem_scaling(seq, c.n_grid, c.reps, c.seed);
  auto table = curve.table;
  std::stable_sort(table.begin(), table.end(),
                   [](const GrowthRow& a, const GrowthRow& b) { return a.replicate < b.replicate; });
  for (const auto& row : table) rows.add(row.replicate, row.n, c.metric, row.value);
  for (auto n : c.n_grid) {
    RunningStats s;
    for (const auto& row : table) {
      if (row.n == n) s.add(row.value);
    }
    add_mean(rows, n, ("mean_" + c.metric).c_str(), s);
  }
  rows.summary(c.n_grid.back(), "slope", curve.fit.slope).std_error = curve.fit.stderr_slope;
}

}  // namespace

std::vector<ResultRecord> execute(const ExperimentConfig& c) {
  if (c.command == Command::build && c.import_path) {
    Rows rows(c, "import:" + c.import_path->string());
    run_build(c, nullptr, rows);
    return rows.take();
  }
  BranchLengthSequence seq = BranchLengthSequence::parse(c.sequence, c.seed);
  Rows rows(c, seq.describe());
  switch (c.command) {
    case Command::gen: run_gen(c, seq, rows); break;
    case Command::build: run_build(c, &seq, rows); break;
    case Command::height: run_height(c, seq, rows); break;
    case Command::twopoint: run_twopoint(c, seq, rows); break;
    case Command::dimension: run_dimension(c, seq, rows); break;
    case Command::martingale: run_martingale(c, seq, rows); break;
    case Command::lp: run_lp(c, seq, rows); break;
    case Command::probe: run_probe(c, seq, rows); break;
  }
  return rows.take();
}

void write_records(const std::vector<ResultRecord>& records, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::json) {
    write_records_json(records, out);
  } else {
    write_records_csv(records, out);
  }
}

void run(const ExperimentConfig& config, std::ostream& fallback) {
  const auto records = execute(config);
  const auto& target = config.command == Command::build ? config.stats_path : config.out;
  if (target) {
    atomic_write(*target, [&](std::ostream& out) { write_records(records, config.format, out); });
  } else {
    write_records(records, config.format, fallback);
  }
}

}  // namespace rtree
