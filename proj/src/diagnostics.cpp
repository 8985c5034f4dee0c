#include "rtree/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <utility>

#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"

namespace rtree {

namespace {

void check_checkpoints(std::span<const std::size_t> checkpoints, std::size_t lo, std::size_t hi) {
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] < lo || checkpoints[k] > hi) throw ParameterError("checkpoint out of range");
    if (k > 0 && checkpoints[k] <= checkpoints[k - 1]) {
      throw ParameterError("checkpoints must be strictly increasing");
    }
  }
}

// Records value at step t when t is the next pending checkpoint (or always, if none given).
class Recorder {
 public:
  Recorder(UrnTrajectory& traj, std::span<const std::size_t> checkpoints)
      : traj_(traj), checkpoints_(checkpoints) {}
  void operator()(std::size_t t, double value) {
    if (checkpoints_.empty()) {
      traj_.steps.push_back(t);
      traj_.values.push_back(value);
    } else if (next_ < checkpoints_.size() && checkpoints_[next_] == t) {
      traj_.steps.push_back(t);
      traj_.values.push_back(value);
      ++next_;
    }
  }

 private:
  UrnTrajectory& traj_;
  std::span<const std::size_t> checkpoints_;
  std::size_t next_ = 0;
};

}  // namespace

UrnTrajectory urn_simulate(BranchLengthSequence& seq, std::size_t i0, double m0, std::size_t n,
                           Stream& stream, std::span<const std::size_t> checkpoints) {
  if (i0 < 1 || n < i0) throw ParameterError("urn_simulate needs 1 <= i0 <= n");
  if (!(m0 > 0.0) || m0 > 1.0) throw ParameterError("initial mass must lie in (0, 1]");
  check_checkpoints(checkpoints, i0, n);
  seq.ensure(n);
  UrnTrajectory traj{.i0 = i0, .m0 = m0, .steps = {}, .values = {}};
  Recorder record(traj, checkpoints);
  double m = m0;
  record(i0, m);
  for (std::size_t t = i0; t < n; ++t) {
    const double kept = seq.A(t) * m;
    if (stream.uniform() < m) {
      m = (kept + seq.a(t + 1)) / seq.A(t + 1);
    } else {
      m = kept / seq.A(t + 1);
    }
    record(t + 1, m);
  }
  return traj;
}

double urn_recursion_mismatch(const BranchLengthSequence& seq, const UrnTrajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.steps.size(); ++k) {
    const std::size_t t = traj.steps[k - 1];
    if (traj.steps[k] != t + 1) continue;
    const double m = traj.values[k - 1];
    const double up = (seq.A(t) * m + seq.a(t + 1)) / seq.A(t + 1);
    const double down = seq.A(t) * m / seq.A(t + 1);
    const double v = traj.values[k];
    worst = std::max(worst, std::min(std::fabs(v - up), std::fabs(v - down)));
  }
  return worst;
}

MassRegion MassRegion::whole_tree(BranchLengthSequence& seq, std::size_t i0) {
  seq.ensure(i0);
  MassRegion r;
  for (std::size_t b = 1; b <= i0; ++b) r.intervals.push_back({b, 0.0, seq.a(b)});
  return r;
}

TrackedMass track_mass(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed, std::size_t i0,
                       const MassRegion& region, std::span<const std::size_t> checkpoints) {
  if (i0 < 1 || n < i0) throw ParameterError("track_mass needs 1 <= i0 <= n");
  check_checkpoints(checkpoints, i0, n);
  seq.ensure(n);
  if (region.intervals.empty()) throw LocationError("mass region is empty");

  // intervals grouped by branch, sorted, checked for overlap
  std::vector<std::vector<std::pair<double, double>>> by_branch(i0 + 1);
  double initial = 0.0;
  for (const auto& c : region.intervals) {
    if (c.branch < 1 || c.branch > i0 || !(c.lo >= 0.0) || c.hi < c.lo || c.hi > seq.a(c.branch)) {
      throw LocationError("mass region interval is not inside a branch of T_i0");
    }
    by_branch[c.branch].emplace_back(c.lo, c.hi);
    initial += c.hi - c.lo;
  }
  for (auto& v : by_branch) {
    std::sort(v.begin(), v.end());
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (v[k].first < v[k - 1].second) throw LocationError("mass region intervals overlap");
    }
  }
  auto in_region = [&](std::size_t b, double s) {
    for (const auto& [lo, hi] : by_branch[b]) {
      if (s >= lo && s <= hi) return true;
    }
    return false;
  };

  Stream stream(seed);
  TreeGrower grower(seq.a(1), seed, n);
  std::vector<char> inside(n + 1, 0);
  TrackedMass out;
  out.trajectory.i0 = i0;
  out.trajectory.m0 = initial / seq.A(i0);
  Recorder record(out.trajectory, checkpoints);
  for (std::size_t i = 2; i <= n; ++i) {
    const PointLocation at = grower.pick_uniform(stream);
    grower.graft(at, seq.a(i));
    if (i <= i0) continue;
    inside[i] = at.branch <= i0 ? in_region(at.branch, at.offset) : inside[at.branch];
  }
  out.tree = std::move(grower).finish();

  // replay the recorded masses in step order
  CompensatedSum replay(initial);
  record(i0, initial / seq.A(i0));
  for (std::size_t t = i0 + 1; t <= n; ++t) {
    if (inside[t]) replay += seq.a(t);
    record(t, replay.value() / seq.A(t));
  }
  return out;
}

double lp_projected_distance(BranchLengthSequence& seq, std::size_t n, std::size_t m, std::size_t n0,
                             std::size_t parts, std::uint64_t seed) {
  if (n0 < 1 || m < n0 || n < m) throw ParameterError("lp_projected_distance needs 1 <= n0 <= m <= n");
  if (parts < 1) throw ParameterError("parts must be >= 1");
  const Tree tree = build_tree(seq, n, seed);
  const double base_length = tree.length_prefix(n0);
  const double piece = base_length / static_cast<double>(parts);
  auto piece_of = [&](double x) {
    return std::min(parts - 1, static_cast<std::size_t>(std::max(0.0, x) / piece));
  };

  // own length of the base branches, split over the pieces they overlap
  std::vector<double> mass(parts, 0.0);
  auto edge = [&](std::size_t k) {
    if (k == 0) return -std::numeric_limits<double>::infinity();
    if (k == parts) return std::numeric_limits<double>::infinity();
    return piece * static_cast<double>(k);
  };
  for (std::size_t b = 1; b <= n0; ++b) {
    const double lo = tree.length_prefix(b - 1);
    const double hi = tree.length_prefix(b);
    for (std::size_t k = piece_of(lo); k <= piece_of(hi); ++k) {
      mass[k] += std::max(0.0, std::min(hi, edge(k + 1)) - std::max(lo, edge(k)));
    }
  }
  std::vector<double> at_m = mass;
  std::vector<std::size_t> entry_piece(n + 1, 0);
  for (std::size_t j = n0 + 1; j <= n; ++j) {
    const std::size_t p = tree.parent(j);
    entry_piece[j] = p <= n0 ? piece_of(tree.length_prefix(p - 1) + tree.attach_offset(j)) : entry_piece[p];
    mass[entry_piece[j]] += tree.length(j);
    if (j == m) at_m = mass;
  }
  if (n == n0) return 0.0;
  const double total_m = tree.length_prefix(m);
  const double total_n = tree.length_prefix(n);
  CompensatedSum tv;
  for (std::size_t k = 0; k < parts; ++k) tv += std::fabs(mass[k] / total_n - at_m[k] / total_m);
  return 0.5 * tv.value();
}

CoveringProfile covering_profile(const Tree& tree, std::size_t m) {
  const std::size_t n = tree.size();
  if (m < 1 || m > n) throw ParameterError("covering_profile needs 1 <= m <= n");
  CoveringProfile out;
  out.m = m;
  std::map<std::pair<std::size_t, double>, std::size_t> slot;
  std::vector<std::size_t> group(n + 1, 0);
  std::vector<PointLocation> roots;
  for (std::size_t j = m + 1; j <= n; ++j) {
    const std::size_t p = tree.parent(j);
    if (p <= m) {
      const auto key = std::make_pair(p, tree.attach_offset(j));
      auto [it, fresh] = slot.try_emplace(key, roots.size());
      if (fresh) roots.push_back({p, tree.attach_offset(j)});
      group[j] = it->second;
    } else {
      group[j] = group[p];
    }
  }
  std::vector<HangingSubtree> entries(roots.size());
  for (std::size_t g = 0; g < roots.size(); ++g) entries[g].root = roots[g];
  std::vector<CompensatedSum> lengths(roots.size());
  for (std::size_t j = m + 1; j <= n; ++j) {
    auto& e = entries[group[j]];
    e.branches.push_back(j);
    lengths[group[j]] += tree.length(j);
    const double base = tree.attach_height(e.root.branch) + e.root.offset;
    e.height = std::max(e.height, tree.attach_height(j) + tree.length(j) - base);
  }
  for (std::size_t g = 0; g < entries.size(); ++g) entries[g].length = lengths[g].value();
  // std::map iteration order gives entries sorted by root
  out.entries.reserve(entries.size());
  for (const auto& [key, g] : slot) out.entries.push_back(std::move(entries[g]));
  return out;
}

// ---------------------------------------------------------------------------
// Farthest-point nets

namespace {

// Point cloud indexed per branch, offsets ascending.
struct PointIndex {
  std::vector<std::size_t> start;   // per branch id, size n + 2
  std::vector<double> offsets;
  std::vector<std::uint32_t> ids;   // index into the caller's point list

  PointIndex(const Tree& tree, std::span<const PointLocation> points) {
    const std::size_t n = tree.size();
    start.assign(n + 2, 0);
    for (const auto& p : points) ++start[p.branch + 1];
    for (std::size_t b = 1; b <= n + 1; ++b) start[b] += start[b - 1];
    offsets.resize(points.size());
    ids.resize(points.size());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::size_t slot = fill[points[k].branch]++;
      offsets[slot] = points[k].offset;
      ids[slot] = static_cast<std::uint32_t>(k);
    }
    std::vector<std::pair<double, std::uint32_t>> buf;
    for (std::size_t b = 1; b <= n; ++b) {
      buf.clear();
      for (std::size_t s = start[b]; s < start[b + 1]; ++s) buf.emplace_back(offsets[s], ids[s]);
      std::sort(buf.begin(), buf.end());
      for (std::size_t s = start[b]; s < start[b + 1]; ++s) {
        offsets[s] = buf[s - start[b]].first;
        ids[s] = buf[s - start[b]].second;
      }
    }
  }
};

// Calls visit(point id, distance) for every indexed point within `radius` of `from`.
template <typename Visit>
void walk_ball(const Tree& tree, const PointIndex& index, const PointLocation& from, double radius,
               std::vector<double>& child_offsets_scratch, Visit&& visit) {
  struct Frame {
    std::size_t branch;
    double pos;        // where the walk enters this branch
    double base;       // distance from `from` to pos
    std::size_t skip;  // child we came up from (0: none)
    bool from_parent;  // entered at the root-side endpoint from the parent
  };
  (void)child_offsets_scratch;
  std::vector<Frame> stack;
  stack.push_back({from.branch, from.offset, 0.0, 0, false});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const double reach = radius - f.base;
    const double lo = f.pos - reach;
    const double hi = f.pos + reach;

    // points on this branch
    const auto pbegin = index.offsets.begin() + static_cast<std::ptrdiff_t>(index.start[f.branch]);
    const auto pend = index.offsets.begin() + static_cast<std::ptrdiff_t>(index.start[f.branch + 1]);
    for (auto it = std::lower_bound(pbegin, pend, lo); it != pend && *it <= hi; ++it) {
      const auto slot = static_cast<std::size_t>(it - index.offsets.begin());
      visit(index.ids[slot], f.base + std::fabs(*it - f.pos));
    }

    // children grafted within reach
    const auto kids = tree.children(f.branch);
    auto first = std::lower_bound(kids.begin(), kids.end(), lo,
                                  [&](std::size_t c, double v) { return tree.attach_offset(c) < v; });
    for (auto it = first; it != kids.end(); ++it) {
      const double c = tree.attach_offset(*it);
      if (c > hi) break;
      if (*it == f.skip) continue;
      stack.push_back({*it, 0.0, f.base + std::fabs(c - f.pos), 0, true});
    }

    // up through the graft point
    if (!f.from_parent && f.branch > 1) {
      const double up = f.base + f.pos;
      if (up <= radius) {
        stack.push_back({tree.parent(f.branch), tree.attach_offset(f.branch), up, f.branch, false});
      }
    }
  }
}

}  // namespace

std::vector<std::size_t> net_sizes(const Tree& tree, std::span<const PointLocation> points,
                                   std::span<const double> eps_grid) {
  if (points.empty()) throw ParameterError("net_sizes needs at least one point");
  if (points.size() > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("too many points");
  for (const auto& p : points) tree.check(p);
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw ParameterError("eps must be positive");
  }
  const PointIndex index(tree, points);
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry> heap;
  std::vector<double> scratch;

  auto add_centre = [&](std::size_t c, double radius) {
    walk_ball(tree, index, points[c], radius, scratch, [&](std::uint32_t id, double d) {
      if (d < dist[id]) {
        dist[id] = d;
        heap.emplace(d, id);
      }
    });
  };

  // order eps descending; answers filled as the covering radius shrinks
  std::vector<std::size_t> order(eps_grid.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps_grid[a] > eps_grid[b]; });
  std::vector<std::size_t> counts(eps_grid.size(), 0);

  add_centre(0, std::numeric_limits<double>::infinity());
  std::size_t centres = 1;
  std::size_t pending = 0;
  for (;;) {
    while (!heap.empty() && heap.top().first != dist[heap.top().second]) heap.pop();
    const double radius = heap.empty() ? 0.0 : heap.top().first;
    while (pending < order.size() && radius <= eps_grid[order[pending]]) {
      counts[order[pending]] = centres;
      ++pending;
    }
    if (pending == order.size()) break;
    const std::uint32_t next = heap.top().second;
    add_centre(next, radius);
    ++centres;
  }
  return counts;
}

BoxDimension box_dimension(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                           std::span<const double> eps_grid, std::size_t replicates, std::uint64_t seed,
                           std::size_t samples) {
  if (n_grid.empty() || replicates < 1 || samples < 1) throw ParameterError("box_dimension needs a non-empty grid");
  std::vector<double> distinct(eps_grid.begin(), eps_grid.end());
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 3) {
    throw ParameterError("eps grid needs at least 3 distinct values");
  }
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw ParameterError("eps must be positive");
  }
  const std::size_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
  seq.ensure(n_max);

  const std::size_t jobs = n_grid.size() * replicates;
  std::vector<std::vector<std::size_t>> counts(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t n = n_grid[job / replicates];
    const std::uint64_t r = job % replicates;
    const std::uint64_t tree_seed = derive_stream_seed(seed, r);
    const Tree tree = build_tree(seq, n, tree_seed);
    Stream stream(mix64(tree_seed ^ 0xB0C5ULL));
    std::vector<PointLocation> points(samples);
    for (auto& p : points) p = sample_uniform(tree, stream);
    counts[job] = net_sizes(tree, points, eps_grid);
  });

  BoxDimension out;
  std::vector<std::pair<double, double>> pairs;
  const double eps_min = distinct.front();
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t n = n_grid[job / replicates];
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
      out.table.push_back({n, job % replicates, eps_grid[k], counts[job][k]});
      if (n == n_max) pairs.emplace_back(1.0 / eps_grid[k], static_cast<double>(counts[job][k]));
      if (eps_grid[k] == eps_min && counts[job][k] * 10 > samples) out.sample_limited = true;
    }
  }
  const ExponentFit fit = fit_exponent(pairs);
  out.slope = fit.slope;
  out.std_error = fit.stderr_slope;
  return out;
}

GoodBranchStats good_branch_stats(BranchLengthSequence& seq, std::size_t n, double alpha, double eps) {
  if (n < 1) throw ParameterError("good_branch_stats needs n >= 1");
  if (!(alpha > 0.0) || !(eps >= 0.0)) throw ParameterError("alpha must be positive and eps >= 0");
  seq.ensure(2 * n);
  GoodBranchStats out;
  CompensatedSum length;
  for (std::size_t i = n; i <= 2 * n; ++i) {
    const double a = seq.a(i);
    if (a >= std::pow(static_cast<double>(i), -alpha - eps)) {
      ++out.count;
      length += a;
    }
  }
  out.length = length.value();
  return out;
}

namespace {

GrowthCurve finish_curve(std::vector<GrowthRow> rows, std::span<const std::size_t> n_grid, std::size_t replicates) {
  GrowthCurve out;
  out.table = std::move(rows);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    RunningStats s;
    for (const auto& row : out.table) {
      if (row.n == n_grid[g]) s.add(row.value);
    }
    pairs.emplace_back(static_cast<double>(n_grid[g]), s.mean());
  }
  (void)replicates;
  out.fit = fit_exponent(pairs);
  return out;
}

void check_n_grid(std::span<const std::size_t> n_grid) {
  if (n_grid.size() < 3) throw ParameterError("n grid needs at least 3 values");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
      throw ParameterError("n grid must be strictly increasing positive integers");
    }
  }
}

}  // namespace

GrowthCurve boundedness_probe(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                              std::size_t replicates, std::uint64_t seed) {
  check_n_grid(n_grid);
  if (replicates < 1) throw ParameterError("replicates must be >= 1");
  const std::size_t n_max = n_grid.back();
  seq.ensure(n_max);
  std::vector<std::vector<GrowthRow>> per(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    // same draws as build_tree, reading max_height of every prefix
    const std::uint64_t tree_seed = derive_stream_seed(seed, r);
    Stream stream(tree_seed);
    TreeGrower grower(seq.a(1), tree_seed, n_max);
    double best = seq.a(1);
    std::size_t next = 0;
    for (std::size_t i = 1; i <= n_max; ++i) {
      if (i >= 2) {
        const std::size_t id = grower.graft(grower.pick_uniform(stream), seq.a(i));
        best = std::max(best, grower.view().attach_height(id) + seq.a(i));
      }
      if (next < n_grid.size() && n_grid[next] == i) {
        per[r].push_back({i, r, best});
        ++next;
      }
    }
  });
  std::vector<GrowthRow> rows;
  for (const auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  std::sort(rows.begin(), rows.end(), [](const GrowthRow& a, const GrowthRow& b) {
    return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
  });
  return finish_curve(std::move(rows), n_grid, replicates);
}

GrowthCurve longest_stem_scaling(BranchLengthSequence& seq, std::span<const std::size_t> n_grid,
                                 std::size_t replicates, std::uint64_t seed) {
  check_n_grid(n_grid);
  if (replicates < 1) throw ParameterError("replicates must be >= 1");
  seq.ensure(n_grid.back());
  const std::size_t jobs = n_grid.size() * replicates;
  std::vector<GrowthRow> rows(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t n = n_grid[job / replicates];
    const std::uint64_t r = job % replicates;
    const Tree tree = build_tree(seq, n, derive_stream_seed(seed, job));
    rows[job] = {n, r, longest_stem(tree)};
  });
  return finish_curve(std::move(rows), n_grid, replicates);
}

}  // namespace rtree
