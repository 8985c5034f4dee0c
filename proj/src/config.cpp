#include "rtree/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rtree/errors.hpp"
#include "rtree/records.hpp"

namespace rtree {

namespace {

constexpr std::string_view kCommandNames[] = {"gen",       "build",      "height", "twopoint",
                                              "dimension", "martingale", "lp",     "probe"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_real(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
  if (!std::isfinite(v)) throw ParameterError(std::string(key) + ": value must be finite");
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc::result_out_of_range) throw ParameterError(std::string(key) + ": value too large");
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    if (!text.empty() && text.front() == '-') throw ParameterError(std::string(key) + ": must be non-negative");
    throw UsageError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::size_t positive_index(std::string_view key, std::string_view text) {
  const auto v = parse_unsigned(key, text);
  if (v < 1) throw ParameterError(std::string(key) + ": must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_real(v[k]);
  return s;
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

Settings settings_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("JSON config must be an object");
  Settings out;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_number()) {
      out[key] = value.dump();
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!item.is_number()) throw FormatError("config key '" + key + "': arrays must hold numbers");
        joined += (joined.empty() ? "" : ",") + item.dump();
      }
      out[key] = joined;
    } else {
      throw FormatError("config key '" + key + "': unsupported value type");
    }
  }
  return out;
}

}  // namespace

std::string_view command_name(Command c) { return kCommandNames[static_cast<int>(c)]; }

Command parse_command(std::string_view name) {
  for (std::size_t k = 0; k < std::size(kCommandNames); ++k) {
    if (kCommandNames[k] == name) return static_cast<Command>(k);
  }
  throw UsageError("unknown command '" + std::string(name) + "'");
}

Settings parse_settings_text(std::string_view text) {
  const auto body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("invalid JSON config: ") + e.what());
    }
    return settings_from_json(doc);
  }
  Settings out;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("expected key = value", line_no);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("empty key", line_no);
    if (!out.emplace(std::string(key), std::string(trim(line.substr(eq + 1)))).second) {
      throw FormatError("duplicate key '" + std::string(key) + "'", line_no);
    }
  }
  return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_settings_text(buf.str());
}

const std::vector<std::string>& allowed_keys(Command c) {
  static const std::vector<std::string> table[] = {
      {"seq", "seed", "out", "format", "n"},
      {"seq", "seed", "out", "format", "n", "import", "stats"},
      {"seq", "seed", "out", "format", "n", "reps", "lambda", "tolerance"},
      {"seq", "seed", "out", "format", "n", "K", "reps", "rgrid", "source", "tolerance"},
      {"seq", "seed", "out", "format", "n", "ngrid", "epsgrid", "reps", "samples"},
      {"seq", "seed", "out", "format", "n", "i0", "m0", "reps", "checkpoints", "source"},
      {"seq", "seed", "out", "format", "n", "m", "n0", "parts", "reps"},
      {"seq", "seed", "out", "format", "ngrid", "reps", "metric", "alpha", "eps"},
  };
  return table[static_cast<int>(c)];
}

std::vector<double> parse_real_grid(std::string_view text) {
  const auto colon = split(text, ':');
  std::vector<double> grid;
  if (colon.size() == 3) {
    const double lo = parse_real("grid", colon[0]);
    const double hi = parse_real("grid", colon[1]);
    const auto steps = parse_unsigned("grid", colon[2]);
    if (!(lo > 0.0) || !(hi > lo) || steps < 2) {
      throw ParameterError("grid lo:hi:steps needs 0 < lo < hi and steps >= 2");
    }
    const double ratio = std::log(lo / hi) / static_cast<double>(steps - 1);
    for (std::uint64_t k = 0; k < steps; ++k) grid.push_back(hi * std::exp(ratio * static_cast<double>(k)));
    grid.back() = lo;
    return grid;
  }
  if (colon.size() != 1) throw UsageError("grid must be v1,v2,... or lo:hi:steps");
  for (auto item : split(text, ',')) grid.push_back(parse_real("grid", item));
  return grid;
}

std::vector<std::size_t> parse_index_grid(std::string_view text) {
  const auto colon = split(text, ':');
  std::vector<std::size_t> grid;
  if (colon.size() == 3) {
    const auto lo = positive_index("grid", colon[0]);
    const auto hi = positive_index("grid", colon[1]);
    const auto steps = parse_unsigned("grid", colon[2]);
    if (hi <= lo || steps < 2) throw ParameterError("grid lo:hi:steps needs lo < hi and steps >= 2");
    const double ratio = std::log(static_cast<double>(hi) / static_cast<double>(lo)) / static_cast<double>(steps - 1);
    for (std::uint64_t k = 0; k < steps; ++k) {
      grid.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(lo) * std::exp(ratio * static_cast<double>(k)))));
    }
    grid.front() = lo;
    grid.back() = hi;
  } else if (colon.size() == 1) {
    for (auto item : split(text, ',')) grid.push_back(positive_index("grid", item));
  } else {
    throw UsageError("grid must be v1,v2,... or lo:hi:steps");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ExperimentConfig ExperimentConfig::from_settings(Command command, const Settings& settings) {
  const auto& keys = allowed_keys(command);
  for (const auto& [key, value] : settings) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw UsageError("unknown key '" + key + "' for command " + std::string(command_name(command)));
    }
  }
  ExperimentConfig c;
  c.command = command;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };

  if (auto v = get("seq")) c.sequence = *v;
  if (c.sequence.empty()) throw UsageError("seq: empty sequence spec");
  if (auto v = get("seed")) c.seed = parse_unsigned("seed", *v);
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("format")) {
    if (*v == "csv") {
      c.format = OutputFormat::csv;
    } else if (*v == "json") {
      c.format = OutputFormat::json;
    } else {
      throw UsageError("format must be csv or json");
    }
  }
  if (auto v = get("n")) {
    if (trim(*v) == "inf") {
      if (command != Command::height && command != Command::twopoint) {
        throw ParameterError("n = inf is only available for height and twopoint");
      }
      c.n_infinite = true;
    } else {
      c.n = positive_index("n", *v);
    }
  }
  if (auto v = get("reps")) c.reps = positive_index("reps", *v);
  if (auto v = get("lambda")) {
    c.lambda = parse_real("lambda", *v);
    if (c.lambda < 0.0) throw ParameterError("lambda must be >= 0");
  }
  if (auto v = get("tolerance")) {
    c.tolerance = parse_real("tolerance", *v);
    if (!(c.tolerance > 0.0)) throw ParameterError("tolerance must be positive");
  }
  if (auto v = get("K")) c.K = positive_index("K", *v);
  if (command == Command::martingale) c.source = "urn";
  if (auto v = get("source")) c.source = *v;
  if (command == Command::twopoint && c.source != "law" && c.source != "tree") {
    throw UsageError("source must be law or tree");
  }
  if (command == Command::martingale && c.source != "urn" && c.source != "tree") {
    throw UsageError("source must be urn or tree");
  }
  if (auto v = get("rgrid")) {
    c.r_grid = parse_real_grid(*v);
    if (c.r_grid.size() < 3) throw ParameterError("rgrid needs at least 3 radii");
    for (std::size_t k = 0; k < c.r_grid.size(); ++k) {
      if (!(c.r_grid[k] > 0.0) || (k > 0 && c.r_grid[k] >= c.r_grid[k - 1])) {
        throw ParameterError("rgrid must be positive and strictly decreasing");
      }
    }
  }
  if (command == Command::dimension) c.eps_grid = {0.125, 0.0625, 0.03125, 0.015625};
  if (auto v = get("epsgrid")) c.eps_grid = parse_real_grid(*v);
  for (double e : c.eps_grid) {
    if (!(e > 0.0)) throw ParameterError("epsgrid values must be positive");
  }
  if (command == Command::dimension && c.eps_grid.size() < 3) {
    throw ParameterError("epsgrid needs at least 3 values");
  }
  if (auto v = get("ngrid")) c.n_grid = parse_index_grid(*v);
  if (command == Command::dimension && c.n_grid.empty()) c.n_grid = {c.n};
  if (command == Command::probe) {
    if (c.n_grid.empty()) c.n_grid = parse_index_grid("256:32768:8");
    if (c.n_grid.size() < 3) throw ParameterError("ngrid needs at least 3 values");
  }
  if (auto v = get("samples")) c.samples = positive_index("samples", *v);
  if (auto v = get("parts")) c.parts = positive_index("parts", *v);
  if (auto v = get("n0")) c.n0 = positive_index("n0", *v);
  if (auto v = get("m")) c.m = positive_index("m", *v);
  if (command == Command::lp) {
    if (c.m == 0) c.m = std::max<std::size_t>(c.n / 2, 1);
    if (c.n0 > c.m || c.m > c.n) throw ParameterError("lp needs n0 <= m <= n");
  }
  if (auto v = get("i0")) c.i0 = positive_index("i0", *v);
  if (auto v = get("m0")) {
    c.m0 = parse_real("m0", *v);
    if (!(c.m0 > 0.0) || c.m0 > 1.0) throw ParameterError("m0 must lie in (0, 1]");
  }
  if (command == Command::martingale) {
    if (c.i0 > c.n) throw ParameterError("martingale needs i0 <= n");
    if (auto v = get("checkpoints")) {
      c.checkpoints = parse_index_grid(*v);
    } else {
      for (std::size_t t = c.i0; t < c.n; t *= 10) c.checkpoints.push_back(t);
      c.checkpoints.push_back(c.n);
    }
    for (auto t : c.checkpoints) {
      if (t < c.i0 || t > c.n) throw ParameterError("checkpoints must lie in [i0, n]");
    }
  }
  if (auto v = get("import")) c.import_path = *v;
  if (auto v = get("stats")) c.stats_path = *v;
  if (auto v = get("metric")) c.metric = *v;
  if (command == Command::probe && c.metric != "max_height" && c.metric != "longest_stem" &&
      c.metric != "good_length") {
    throw UsageError("metric must be max_height, longest_stem or good_length");
  }
  if (auto v = get("alpha")) {
    c.alpha = parse_real("alpha", *v);
    if (!(c.alpha > 0.0)) throw ParameterError("alpha must be positive");
  }
  if (auto v = get("eps")) {
    c.eps = parse_real("eps", *v);
    if (c.eps < 0.0) throw ParameterError("eps must be >= 0");
  }
  return c;
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> v;
  v["command"] = std::string(command_name(command));
  v["seq"] = sequence;
  v["seed"] = std::to_string(seed);
  const std::set<std::string> skip{"seq", "seed", "out", "format", "stats"};
  for (const auto& key : allowed_keys(command)) {
    if (skip.contains(key)) continue;
    if (key == "n") v[key] = n_infinite ? "inf" : std::to_string(n);
    if (key == "reps") v[key] = std::to_string(reps);
    if (key == "lambda") v[key] = format_real(lambda);
    if (key == "tolerance") v[key] = format_real(tolerance);
    if (key == "K") v[key] = std::to_string(K);
    if (key == "source") v[key] = source;
    if (key == "rgrid") v[key] = join_reals(r_grid);
    if (key == "epsgrid") v[key] = join_reals(eps_grid);
    if (key == "ngrid") v[key] = join_indices(n_grid);
    if (key == "samples") v[key] = std::to_string(samples);
    if (key == "parts") v[key] = std::to_string(parts);
    if (key == "n0") v[key] = std::to_string(n0);
    if (key == "m") v[key] = std::to_string(m);
    if (key == "i0") v[key] = std::to_string(i0);
    if (key == "m0") v[key] = format_real(m0);
    if (key == "checkpoints") v[key] = join_indices(checkpoints);
    if (key == "import") v[key] = import_path ? import_path->string() : "";
    if (key == "metric") v[key] = metric;
    if (key == "alpha") v[key] = format_real(alpha);
    if (key == "eps") v[key] = format_real(eps);
  }
  std::string out;
  for (const auto& [key, value] : v) out += key + "=" + value + "\n";
  return out;
}

}  // namespace rtree
