#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rtree {

enum class Command { gen, build, height, twopoint, dimension, martingale, lp, probe };
enum class OutputFormat { csv, json };

std::string_view command_name(Command c);
// Throws UsageError for names outside gen|build|height|twopoint|dimension|martingale|lp|probe.
Command parse_command(std::string_view name);

// Raw key -> value settings, before typing and validation.
using Settings = std::map<std::string, std::string>;

// Flat `key = value` lines ('#' starts a comment) or a single JSON object whose values are
// strings, numbers or arrays of numbers. Throws FormatError (with line) or IoError.
Settings read_settings_file(const std::filesystem::path& path);
Settings parse_settings_text(std::string_view text);

// Keys accepted by a command, in canonical order.
const std::vector<std::string>& allowed_keys(Command c);

// A validated experiment. Every field has been range-checked before any work starts.
struct ExperimentConfig {
  Command command = Command::gen;
  std::string sequence = "power:0.5";
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  bool n_infinite = false;  // `n = inf` (height and twopoint only)
  std::size_t reps = 1;
  std::optional<std::filesystem::path> out;
  OutputFormat format = OutputFormat::csv;

  double lambda = -1.0;      // height: MGF rows when >= 0
  double tolerance = 1e-3;   // truncation budget for n = inf
  std::size_t K = 0;         // twopoint: 0 means K = n
  std::string source = "law";  // twopoint: law|tree; martingale: urn|tree
  std::vector<double> r_grid;
  std::vector<double> eps_grid;
  std::vector<std::size_t> n_grid;
  std::size_t samples = 200'000;
  std::size_t parts = 16;
  std::size_t n0 = 100;
  std::size_t m = 0;         // lp: 0 means n / 2
  std::size_t i0 = 10;
  double m0 = 0.3;
  std::vector<std::size_t> checkpoints;
  std::optional<std::filesystem::path> import_path;
  std::optional<std::filesystem::path> stats_path;
  std::string metric = "max_height";  // probe: max_height|longest_stem|good_length
  double alpha = 0.5;        // probe good_length
  double eps = 0.0;

  // Typed view of `settings` for `command`. Unknown keys and unparsable values raise
  // UsageError; values out of range raise ParameterError.
  static ExperimentConfig from_settings(Command command, const Settings& settings);

  // key=value lines for every key that affects results (not out/format/stats), sorted.
  std::string canonical() const;
};

// Grid syntax shared by rgrid/epsgrid: `v1,v2,...` or `lo:hi:steps` (log-spaced from hi down to lo).
std::vector<double> parse_real_grid(std::string_view text);
// `v1,v2,...` or `lo:hi:steps` (log-spaced, rounded, duplicates dropped, ascending).
std::vector<std::size_t> parse_index_grid(std::string_view text);

}  // namespace rtree
