#include "rtree/sequences.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rtree/errors.hpp"
#include "rtree/numerics.hpp"

namespace rtree {

namespace {

bool is_perfect_cube(std::size_t i) {
  auto r = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(i))));
  for (std::size_t c = (r > 0 ? r - 1 : 0); c <= r + 1; ++c) {
    if (c * c * c == i) return true;
  }
  return false;
}

double require_positive(double v, std::string_view what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string(what) + " must be a positive finite number");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

double parse_parameter(std::string_view text, std::string_view spec) {
  auto v = to_double(text);
  if (!v) throw SpecError("cannot parse numeric parameter in sequence spec '" + std::string(spec) + "'");
  return require_positive(*v, "sequence parameter");
}

std::vector<double> read_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sequence file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    auto t = trim(line);
    if (t.empty()) continue;
    auto v = to_double(t);
    if (!v) throw FormatError("not a decimal number: '" + std::string(t) + "'", row);
    if (!(*v > 0.0) || !std::isfinite(*v)) throw FormatError("branch length must be positive", row);
    values.push_back(*v);
  }
  if (values.empty()) throw FormatError("sequence file '" + path + "' has no values");
  return values;
}

}  // namespace

BranchLengthSequence::BranchLengthSequence(SequenceKind kind, double param)
    : kind_(kind), param_(param) {}

BranchLengthSequence BranchLengthSequence::power_law(double alpha) {
  return {SequenceKind::power_law, require_positive(alpha, "alpha")};
}

BranchLengthSequence BranchLengthSequence::poisson_intervals(double beta, std::uint64_t seed) {
  BranchLengthSequence s{SequenceKind::poisson_intervals, require_positive(beta, "beta")};
  s.seed_ = seed;
  s.stream_.emplace(derive_stream_seed(seed, kSequenceStreamTag));
  return s;
}

BranchLengthSequence BranchLengthSequence::log_power(double lambda) {
  return {SequenceKind::log_power, require_positive(lambda, "lambda")};
}

BranchLengthSequence BranchLengthSequence::constant(double value) {
  return {SequenceKind::constant, require_positive(value, "constant branch length")};
}

BranchLengthSequence BranchLengthSequence::spiked() { return {SequenceKind::spiked, 0.5}; }

BranchLengthSequence BranchLengthSequence::explicit_list(std::vector<double> values) {
  if (values.empty()) throw ParameterError("explicit sequence must have at least one term");
  for (double v : values) require_positive(v, "explicit branch length");
  BranchLengthSequence s{SequenceKind::explicit_list, 0.0};
  s.explicit_ = std::move(values);
  return s;
}

BranchLengthSequence BranchLengthSequence::parse(std::string_view spec,
                                                 std::optional<std::uint64_t> seed) {
  const std::string text(trim(spec));
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string_view rest =
      colon == std::string::npos ? std::string_view{} : std::string_view(text).substr(colon + 1);
  const bool has_arg = colon != std::string::npos;

  if (head == "spiked" && !has_arg) return spiked();
  if (!has_arg) throw SpecError("unknown sequence spec '" + text + "'");
  if (head == "power") return power_law(parse_parameter(rest, text));
  if (head == "logpow") return log_power(parse_parameter(rest, text));
  if (head == "const") return constant(parse_parameter(rest, text));
  if (head == "poisson") {
    const double beta = parse_parameter(rest, text);
    if (!seed) throw ParameterError("poisson sequences need a seed");
    return poisson_intervals(beta, *seed);
  }
  if (head == "file") {
    if (rest.empty()) throw SpecError("file: spec needs a path");
    return explicit_list(read_values_file(std::string(rest)));
  }
  if (head == "list") {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto item = rest.substr(pos, comma == std::string_view::npos ? rest.size() - pos : comma - pos);
      auto v = to_double(item);
      if (!v) throw SpecError("cannot parse list entry '" + std::string(item) + "'");
      values.push_back(require_positive(*v, "explicit branch length"));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return explicit_list(std::move(values));
  }
  throw SpecError("unknown sequence spec '" + text + "'");
}

std::string BranchLengthSequence::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case SequenceKind::power_law: os << "power:" << param_; break;
    case SequenceKind::poisson_intervals: os << "poisson:" << param_ << "@seed=" << seed_; break;
    case SequenceKind::log_power: os << "logpow:" << param_; break;
    case SequenceKind::constant: os << "const:" << param_; break;
    case SequenceKind::spiked: os << "spiked"; break;
    case SequenceKind::explicit_list: os << "list:<" << explicit_.size() << " values>"; break;
  }
  return os.str();
}

std::optional<std::size_t> BranchLengthSequence::max_terms() const {
  if (kind_ == SequenceKind::explicit_list) return explicit_.size();
  return std::nullopt;
}

double BranchLengthSequence::next_term(std::size_t i) {
  const double x = static_cast<double>(i);
  switch (kind_) {
    case SequenceKind::power_law: return std::pow(x, -param_);
    case SequenceKind::log_power: return std::pow(std::log(x + 1.0), -param_);
    case SequenceKind::constant: return param_;
    case SequenceKind::spiked: return 1.0 / std::sqrt(x) + (is_perfect_cube(i) ? 1.0 : 0.0);
    case SequenceKind::explicit_list: return explicit_[i - 1];
    case SequenceKind::poisson_intervals: {
      // Lambda(t) = t^(beta+1) / (beta+1); Lambda(t_k) - Lambda(t_{k-1}) = E_k.
      const double e = stream_->exponential();
      const double q = param_ + 1.0;
      if (i == 1) {
        poisson_sum_ = e;
        poisson_time_ = std::pow(q * e, 1.0 / q);
        return poisson_time_;
      }
      // t_k - t_{k-1} = t_{k-1} ((1 + E/S)^(1/q) - 1), stable for small gaps.
      const double gap = poisson_time_ * std::expm1(std::log1p(e / poisson_sum_) / q);
      poisson_sum_ += e;
      poisson_time_ = std::pow(q * poisson_sum_, 1.0 / q);
      return gap;
    }
  }
  return 0.0;
}

void BranchLengthSequence::ensure(std::size_t n) {
  if (n <= cached()) return;
  if (kind_ == SequenceKind::explicit_list && n > explicit_.size()) {
    throw ParameterError("explicit sequence has only " + std::to_string(explicit_.size()) +
                         " terms, " + std::to_string(n) + " requested");
  }
  a_.reserve(n + 1);
  sums_.reserve(n + 1);
  sup_.reserve(n + 1);
  // Neumaier running sum; sum_comp_ carries the compensation between calls.
  double s = sum_raw_;
  double c = sum_comp_;
  for (std::size_t i = cached() + 1; i <= n; ++i) {
    const double v = next_term(i);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError("sequence produced a non-positive term at index " + std::to_string(i));
    }
    const double t = s + v;
    if (std::fabs(s) >= std::fabs(v)) {
      c += (s - t) + v;
    } else {
      c += (v - t) + s;
    }
    s = t;
    a_.push_back(v);
    sums_.push_back(s + c);
    sup_.push_back(std::max(sup_.back(), v));
  }
  sum_raw_ = s;
  sum_comp_ = c;
}

bool BranchLengthSequence::unbounded_warning(std::size_t n) const {
  n = std::min(n, cached());
  if (n < 16) return false;
  const std::size_t half = n / 2;
  const double early = sup_[half];
  double late = 0.0;
  for (std::size_t i = half + 1; i <= n; ++i) late = std::max(late, a_[i]);
  return late > 2.0 * early;
}

std::vector<double> generate(BranchLengthSequence& seq, std::size_t n) {
  if (n < 1) throw ParameterError("generate needs n >= 1");
  seq.ensure(n);
  auto v = seq.lengths(n);
  return {v.begin(), v.end()};
}

double h_of_a(BranchLengthSequence& seq, std::size_t n) {
  if (n == 0) return 0.0;
  return tail_h(seq, 1, n);
}

double tail_h(BranchLengthSequence& seq, std::size_t from, std::size_t to) {
  if (from < 1 || to < from) throw ParameterError("tail_h needs 1 <= from <= to");
  seq.ensure(to);
  CompensatedSum sum;
  for (std::size_t i = from; i <= to; ++i) {
    const double a = seq.a(i);
    sum += a * (a / seq.A(i));
  }
  return sum.value();
}

SeriesDiagnostics series_diagnostics(BranchLengthSequence& seq, std::size_t n) {
  if (n < 1) throw ParameterError("series_diagnostics needs N >= 1");
  seq.ensure(n);
  SeriesDiagnostics d;
  d.n = n;
  CompensatedSum s1, s2, s1_inc, s2_inc, sa_inc;
  const std::size_t half = n / 2;
  for (std::size_t i = 1; i <= n; ++i) {
    const double a = seq.a(i);
    const double A = seq.A(i);
    const double t1 = a / (A * A);
    const double r = a / A;
    const double t2 = r * r;
    s1 += t1;
    s2 += t2;
    if (i > half) {
      s1_inc += t1;
      s2_inc += t2;
      sa_inc += a;
    }
  }
  d.sum_a_over_A2 = s1.value();
  d.sum_ratio_sq = s2.value();
  d.sum_a = seq.A(n);
  d.sup_a = seq.sup_a(n);
  d.inc_a_over_A2 = s1_inc.value();
  d.inc_ratio_sq = s2_inc.value();
  d.inc_sum_a = sa_inc.value();
  return d;
}

ExponentFit fit_exponent(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw ParameterError("fit_exponent needs at least 3 pairs");
  std::vector<double> lx, ly;
  lx.reserve(pairs.size());
  ly.reserve(pairs.size());
  for (const auto& [x, v] : pairs) {
    if (!(x > 0.0) || !(v > 0.0) || !std::isfinite(x) || !std::isfinite(v)) {
      throw ParameterError("fit_exponent needs strictly positive finite pairs");
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(v));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("fit_exponent needs at least two distinct abscissae");
  ExponentFit fit;
  fit.points = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  fit.stderr_slope = std::sqrt(sse / (m - 2.0) / sxx);
  return fit;
}

}  // namespace rtree
