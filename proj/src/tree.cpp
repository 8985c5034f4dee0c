#include "rtree/tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "rtree/errors.hpp"
#include "rtree/records.hpp"
#include "rtree/sequences.hpp"

namespace rtree {

// ---------------------------------------------------------------------------
// Tree

Branch Tree::branch(std::size_t id) const {
  if (id < 1 || id > size()) throw LocationError("no branch with id " + std::to_string(id));
  return {id, parent_[id], offset_[id], length_[id], height_[id]};
}

std::span<const std::size_t> Tree::children(std::size_t id) const {
  if (child_start_.empty()) throw std::logic_error("children() needs a finished tree");
  return {child_ids_.data() + child_start_[id], child_start_[id + 1] - child_start_[id]};
}

bool Tree::contains(const PointLocation& p) const noexcept {
  return p.branch >= 1 && p.branch <= size() && p.offset >= 0.0 && p.offset <= length_[p.branch];
}

void Tree::check(const PointLocation& p) const {
  if (!contains(p)) {
    throw LocationError("point (" + std::to_string(p.branch) + ", " + std::to_string(p.offset) +
                        ") is not in the tree");
  }
}

void Tree::append(std::size_t parent, double offset, double length) {
  parent_.push_back(parent);
  offset_.push_back(offset);
  length_.push_back(length);
  height_.push_back(parent == 0 ? 0.0 : height_[parent] + offset);
  const double t = prefix_raw_ + length;
  if (std::fabs(prefix_raw_) >= std::fabs(length)) {
    prefix_comp_ += (prefix_raw_ - t) + length;
  } else {
    prefix_comp_ += (length - t) + prefix_raw_;
  }
  prefix_raw_ = t;
  prefix_.push_back(prefix_raw_ + prefix_comp_);
}

void Tree::index_children() {
  const std::size_t n = size();
  child_start_.assign(n + 2, 0);
  for (std::size_t id = 2; id <= n; ++id) ++child_start_[parent_[id] + 1];
  for (std::size_t id = 1; id <= n + 1; ++id) child_start_[id] += child_start_[id - 1];
  child_ids_.assign(n > 0 ? n - 1 : 0, 0);
  std::vector<std::size_t> fill(child_start_.begin(), child_start_.end() - 1);
  for (std::size_t id = 2; id <= n; ++id) child_ids_[fill[parent_[id]]++] = id;
  for (std::size_t id = 1; id <= n; ++id) {
    auto first = child_ids_.begin() + static_cast<std::ptrdiff_t>(child_start_[id]);
    auto last = child_ids_.begin() + static_cast<std::ptrdiff_t>(child_start_[id + 1]);
    if (last - first < 2) continue;
    std::sort(first, last, [this](std::size_t a, std::size_t b) {
      return offset_[a] != offset_[b] ? offset_[a] < offset_[b] : a < b;
    });
  }
}

Tree Tree::from_records(std::span<const BranchRecord> records, std::uint64_t seed) {
  if (records.empty()) throw FormatError("tree has no branches");
  Tree t;
  t.seed_ = seed;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::size_t id = k + 1;
    const auto& r = records[k];
    if (!(r.length > 0.0) || !std::isfinite(r.length)) {
      throw FormatError("branch " + std::to_string(id) + " has non-positive length", id);
    }
    if (id == 1) {
      if (r.parent_id != 0 || r.attach_offset != 0.0) {
        throw FormatError("branch 1 must have parent 0 and attach offset 0", id);
      }
    } else {
      if (r.parent_id < 1 || r.parent_id >= id) {
        throw FormatError("branch " + std::to_string(id) + " must hang from a smaller id", id);
      }
      if (!(r.attach_offset >= 0.0) || r.attach_offset > t.length_[r.parent_id]) {
        throw FormatError("branch " + std::to_string(id) +
                              " attach offset lies outside its parent branch",
                          id);
      }
    }
    t.append(r.parent_id, r.attach_offset, r.length);
  }
  t.index_children();
  return t;
}

// ---------------------------------------------------------------------------
// TreeGrower

TreeGrower::TreeGrower(double first_length, std::uint64_t seed, std::size_t reserve) {
  if (!(first_length > 0.0)) throw ParameterError("branch length must be positive");
  tree_.seed_ = seed;
  if (reserve > 0) {
    tree_.parent_.reserve(reserve + 1);
    tree_.offset_.reserve(reserve + 1);
    tree_.length_.reserve(reserve + 1);
    tree_.height_.reserve(reserve + 1);
    tree_.prefix_.reserve(reserve + 1);
  }
  tree_.append(0, 0.0, first_length);
}

PointLocation TreeGrower::pick_uniform(Stream& stream) const { return sample_uniform(tree_, stream); }

std::size_t TreeGrower::graft(const PointLocation& at, double length) {
  tree_.check(at);
  if (!(length > 0.0)) throw ParameterError("branch length must be positive");
  tree_.append(at.branch, at.offset, length);
  return tree_.size();
}

Tree TreeGrower::finish() && {
  tree_.index_children();
  return std::move(tree_);
}

// ---------------------------------------------------------------------------
// Queries

Tree build_tree(BranchLengthSequence& seq, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("build_tree needs n >= 1");
  seq.ensure(n);
  Stream stream(seed);
  TreeGrower grower(seq.a(1), seed, n);
  for (std::size_t i = 2; i <= n; ++i) grower.graft(grower.pick_uniform(stream), seq.a(i));
  return std::move(grower).finish();
}

double distance(const Tree& tree, const PointLocation& p, const PointLocation& q) {
  tree.check(p);
  tree.check(q);
  std::size_t bp = p.branch, bq = q.branch;
  double op = p.offset, oq = q.offset;
  double climbed = 0.0;
  // Parent ids are smaller, so always lift the point on the larger id.
  while (bp != bq) {
    if (bp > bq) {
      climbed += op;
      op = tree.attach_offset(bp);
      bp = tree.parent(bp);
    } else {
      climbed += oq;
      oq = tree.attach_offset(bq);
      bq = tree.parent(bq);
    }
  }
  return climbed + std::fabs(op - oq);
}

PointLocation project(const Tree& tree, const PointLocation& p, std::size_t k) {
  tree.check(p);
  if (k < 1 || k > tree.size()) throw ParameterError("projection level out of range");
  PointLocation x = p;
  while (x.branch > k) x = {tree.parent(x.branch), tree.attach_offset(x.branch)};
  return x;
}

PointLocation sample_uniform(const Tree& tree, Stream& stream) {
  const std::size_t n = tree.size();
  const double target = stream.uniform() * tree.total_length();
  // first id with prefix(id) > target, by a branch-free binary search
  std::size_t lo = 1;
  for (std::size_t len = n; len > 1;) {
    const std::size_t half = len / 2;
    lo = tree.length_prefix(lo + half - 1) <= target ? lo + half : lo;
    len -= half;
  }
  lo = std::min(n, lo + (tree.length_prefix(lo) <= target ? 1 : 0));
  return {lo, stream.uniform() * tree.length(lo)};
}

double height(const Tree& tree, const PointLocation& p) {
  tree.check(p);
  return tree.attach_height(p.branch) + p.offset;
}

double max_height(const Tree& tree) {
  double best = 0.0;
  for (std::size_t id = 1; id <= tree.size(); ++id) {
    best = std::max(best, tree.attach_height(id) + tree.length(id));
  }
  return best;
}

std::vector<double> stem_lengths(const Tree& tree, std::size_t branch) {
  tree.check({branch, 0.0});
  std::vector<double> gaps;
  double previous = 0.0;
  for (std::size_t child : tree.children(branch)) {
    const double s = tree.attach_offset(child);
    gaps.push_back(s - previous);
    previous = s;
  }
  gaps.push_back(tree.length(branch) - previous);
  return gaps;
}

double longest_stem(const Tree& tree) {
  double best = 0.0;
  for (std::size_t id = 1; id <= tree.size(); ++id) {
    double previous = 0.0;
    for (std::size_t child : tree.children(id)) {
      const double s = tree.attach_offset(child);
      best = std::max(best, s - previous);
      previous = s;
    }
    best = std::max(best, tree.length(id) - previous);
  }
  return best;
}

double subtree_length(const Tree& tree, std::size_t i, const BranchInterval& c, std::size_t upto) {
  if (upto == 0) upto = tree.size();
  if (upto > tree.size() || i < 1 || i > upto) throw ParameterError("subtree level out of range");
  if (c.branch < 1 || c.branch > i || !(c.lo >= 0.0) || c.hi < c.lo || c.hi > tree.length(c.branch)) {
    throw LocationError("interval is not inside a branch of T_i");
  }
  // inside[j] for j > i: the point where branch j's ancestry enters T_i lies in C.
  std::vector<char> inside(upto + 1, 0);
  double total = c.hi - c.lo;
  for (std::size_t j = i + 1; j <= upto; ++j) {
    const std::size_t p = tree.parent(j);
    if (p <= i) {
      const double s = tree.attach_offset(j);
      inside[j] = p == c.branch && s >= c.lo && s <= c.hi;
    } else {
      inside[j] = inside[p];
    }
    if (inside[j]) total += tree.length(j);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Edge-list CSV

namespace {

constexpr std::string_view kHeader = "id,parent_id,attach_offset,length";

template <typename T>
T parse_field(std::string_view s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("cannot parse field '" + std::string(s) + "'", line);
  }
  return v;
}

}  // namespace

void write_tree_csv(const Tree& tree, std::ostream& out) {
  out << kHeader << '\n';
  for (std::size_t id = 1; id <= tree.size(); ++id) {
    out << id << ',' << tree.parent(id) << ',' << format_real(tree.attach_offset(id)) << ','
        << format_real(tree.length(id)) << '\n';
  }
}

void export_tree(const Tree& tree, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& out) { write_tree_csv(tree, out); });
}

Tree read_tree_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("empty tree file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw FormatError("expected header '" + std::string(kHeader) + "'", 1);
  std::vector<BranchRecord> records;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 4) throw FormatError("expected 4 fields", line_no);
    const auto id = parse_field<std::size_t>(fields[0], line_no);
    if (id != records.size() + 1) {
      throw FormatError("ids must be 1..n in increasing order (got " + std::to_string(id) + ")", line_no);
    }
    BranchRecord r;
    r.parent_id = parse_field<std::size_t>(fields[1], line_no);
    r.attach_offset = parse_field<double>(fields[2], line_no);
    r.length = parse_field<double>(fields[3], line_no);
    records.push_back(r);
    lines.push_back(line_no);
  }
  try {
    return Tree::from_records(records);
  } catch (const FormatError& e) {
    // from_records reports branch ids; translate them to file lines
    std::string msg = e.what();
    if (e.row() == 0) throw;
    msg = msg.substr(msg.find(": ") + 2);
    throw FormatError(msg, lines[e.row() - 1]);
  }
}

Tree import_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tree file '" + path.string() + "'");
  return read_tree_csv(in);
}

}  // namespace rtree
