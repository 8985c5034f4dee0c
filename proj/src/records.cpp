#include "rtree/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "rtree/errors.hpp"

namespace rtree {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_records_csv(std::span<const ResultRecord> records, std::ostream& out) {
  out << "experiment_id,command,sequence,seed,replicate,n,statistic,value,stderr,truncation_error\n";
  for (const auto& r : records) {
    out << csv_field(r.experiment_id) << ',' << csv_field(r.command) << ',' << csv_field(r.sequence)
        << ',' << r.seed << ',';
    if (r.replicate) out << *r.replicate;
    out << ',' << r.n << ',' << csv_field(r.statistic) << ',' << format_real(r.value) << ',';
    if (r.std_error) out << format_real(*r.std_error);
    out << ',';
    if (r.truncation_error) out << format_real(*r.truncation_error);
    out << '\n';
  }
}

namespace {

nlohmann::json real_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

void write_records_json(std::span<const ResultRecord> records, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json row;
    row["experiment_id"] = r.experiment_id;
    row["command"] = r.command;
    row["sequence"] = r.sequence;
    row["seed"] = r.seed;
    row["replicate"] = r.replicate ? nlohmann::json(*r.replicate) : nlohmann::json(nullptr);
    row["n"] = r.n;
    row["statistic"] = r.statistic;
    row["value"] = real_or_null(r.value);
    row["stderr"] = real_or_null(r.std_error);
    row["truncation_error"] = real_or_null(r.truncation_error);
    rows.push_back(std::move(row));
  }
  out << rows.dump(1) << '\n';
}

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("output directory does not exist: '" + dir.string() + "'");
  const std::string suffix = ".tmp" + std::to_string(::getpid());
  const fs::path tmp = dir / (path.filename().string() + suffix);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write output file '" + path.string() + "'");
    try {
      body(out);
    } catch (...) {
      out.close();
      fs::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("failed while writing '" + path.string() + "'");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rtree
