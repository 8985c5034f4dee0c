#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtree/rng.hpp"

namespace rtree {

// Poisson sequences draw from Stream(derive_stream_seed(seed, kSequenceStreamTag)), so a tree
// built with the same master seed is independent of its branch lengths.
inline constexpr std::uint64_t kSequenceStreamTag = 0x5EC0'0000'0000'0001ULL;

enum class SequenceKind {
  power_law,          // a_i = i^-alpha
  poisson_intervals,  // gaps of a Poisson process with intensity t^beta dt
  log_power,          // a_i = ln(i + 1)^-lambda
  constant,           // a_i = c
  spiked,             // a_i = i^-1/2 + 1{i is a perfect cube}
  explicit_list,      // user-supplied values
};

// Branch lengths a_1, a_2, ... with a lazily extended cache of a_i, the partial sums A_i and
// the running supremum. Extending the cache (ensure) is single-writer; once a caller has
// ensured the largest index it needs, const access is safe from any number of threads.
class BranchLengthSequence {
 public:
  static BranchLengthSequence power_law(double alpha);
  static BranchLengthSequence poisson_intervals(double beta, std::uint64_t seed);
  static BranchLengthSequence log_power(double lambda);
  static BranchLengthSequence constant(double value);
  static BranchLengthSequence spiked();
  static BranchLengthSequence explicit_list(std::vector<double> values);

  // Grammar: power:ALPHA | poisson:BETA | logpow:LAMBDA | const:C | spiked | file:PATH |
  // list:V1,V2,...  The seed is required for (and only used by) poisson.
  // Throws SpecError on grammar, ParameterError on bad numbers, FormatError/IoError on files.
  static BranchLengthSequence parse(std::string_view spec,
                                    std::optional<std::uint64_t> seed = std::nullopt);

  SequenceKind kind() const noexcept { return kind_; }
  bool is_random() const noexcept { return kind_ == SequenceKind::poisson_intervals; }
  double parameter() const noexcept { return param_; }
  // Canonical spec string (explicit lists print as list:<count values>).
  std::string describe() const;
  // Number of available terms for explicit lists, nullopt for infinite families.
  std::optional<std::size_t> max_terms() const;

  // Makes a_1..a_n available. Throws ParameterError if an explicit list is too short.
  void ensure(std::size_t n);
  std::size_t cached() const noexcept { return a_.size() - 1; }

  // 1-based; requires i <= cached().
  double a(std::size_t i) const noexcept { return a_[i]; }
  // A(0) = 0; requires i <= cached().
  double A(std::size_t i) const noexcept { return sums_[i]; }
  // sup_{j <= i} a_j.
  double sup_a(std::size_t i) const noexcept { return sup_[i]; }

  // a_1..a_n and A_0..A_n views (n <= cached()).
  std::span<const double> lengths(std::size_t n) const { return {a_.data() + 1, n}; }
  std::span<const double> partial_sums(std::size_t n) const { return {sums_.data(), n + 1}; }

  // Soft boundedness check on a_1..a_n: true when sup over (n/2, n] exceeds twice the sup
  // over [1, n/2] (n >= 16). Never an error.
  bool unbounded_warning(std::size_t n) const;

 private:
  BranchLengthSequence(SequenceKind kind, double param);
  double next_term(std::size_t i);

  SequenceKind kind_;
  double param_;
  std::vector<double> explicit_;
  std::optional<Stream> stream_;
  std::uint64_t seed_ = 0;
  double poisson_sum_ = 0.0;   // Lambda(t_k) = sum of exponentials so far
  double poisson_time_ = 0.0;  // t_k
  // Index 0 is a placeholder so that a_[i] is a_i.
  std::vector<double> a_{0.0};
  std::vector<double> sums_{0.0};
  std::vector<double> sup_{0.0};
  double sum_raw_ = 0.0;
  double sum_comp_ = 0.0;
};

// a_1..a_n; extends the cache.
std::vector<double> generate(BranchLengthSequence& seq, std::size_t n);

// sum_{i<=n} a_i^2 / A_i, compensated.
double h_of_a(BranchLengthSequence& seq, std::size_t n);

// sum_{from<=i<=to} a_i^2 / A_i.
double tail_h(BranchLengthSequence& seq, std::size_t from, std::size_t to);

struct SeriesDiagnostics {
  std::size_t n = 0;
  double sum_a_over_A2 = 0.0;     // sum a_i / A_i^2
  double sum_ratio_sq = 0.0;      // sum (a_i / A_i)^2
  double sum_a = 0.0;             // A_N
  double sup_a = 0.0;
  // Contribution of indices in (N/2, N] to each of the three sums.
  double inc_a_over_A2 = 0.0;
  double inc_ratio_sq = 0.0;
  double inc_sum_a = 0.0;
};

SeriesDiagnostics series_diagnostics(BranchLengthSequence& seq, std::size_t n);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

// Least-squares slope of log v against log x. Needs >= 3 pairs with positive entries and at
// least two distinct x; otherwise ParameterError.
ExponentFit fit_exponent(std::span<const std::pair<double, double>> pairs);

}  // namespace rtree
