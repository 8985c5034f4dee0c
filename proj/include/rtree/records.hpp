#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace rtree {

// One keyed statistic row. Summary rows leave `replicate` empty.
struct ResultRecord {
  std::string experiment_id;
  std::string command;
  std::string sequence;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> replicate;
  std::uint64_t n = 0;
  std::string statistic;
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<double> truncation_error;
};

// Shortest round-trippable text for a double (%.17g); "nan"/"inf" spelled out.
std::string format_real(double v);

// RFC 4180 quoting: fields containing ',', '"', CR or LF are wrapped in quotes.
std::string csv_field(std::string_view s);

// Header `experiment_id,command,sequence,seed,replicate,n,statistic,value,stderr,truncation_error`.
void write_records_csv(std::span<const ResultRecord> records, std::ostream& out);
// The same rows as a JSON array of flat objects; absent optionals are null.
void write_records_json(std::span<const ResultRecord> records, std::ostream& out);

// Writes through a temporary sibling file and renames it over `path`, so a partially
// written file is never visible at the final name. Throws IoError.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

// 64-bit FNV-1a, printed as 16 hex digits. Used for experiment ids.
std::string fingerprint(std::string_view text);

}  // namespace rtree
