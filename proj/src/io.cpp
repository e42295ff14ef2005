#include "vwlab/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vwlab::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "t",   "E",  "kinetic", "elastic", "memory", "source",  "dissipation_rate", "cum_damping",
      "phi", "psi", "M",      "G",       "Gp",     "Lambda",  "l2_norm",          "grad_norm",
      "linf_norm"};
  return cols;
}

namespace {

// Same order as record_columns().
std::vector<double*> record_fields(FunctionalRecord& r) {
  return {&r.t,   &r.E,   &r.kinetic, &r.elastic, &r.memory, &r.source, &r.dissipation_rate,
          &r.cum_damping, &r.phi, &r.psi, &r.M, &r.G, &r.Gp, &r.Lambda, &r.l2_norm,
          &r.grad_norm, &r.linf_norm};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << format_double(row[i]);
  }
  out << '\n';
}

}  // namespace

void write_records_csv(const fs::path& path, std::span<const FunctionalRecord> records) {
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  for (auto r : records) {
    std::vector<double> row;
    for (double* f : record_fields(r)) row.push_back(*f);
    rows.push_back(std::move(row));
  }
  write_columns_csv(path, record_columns(), rows);
}

std::vector<FunctionalRecord> read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::string expected;
  for (const auto& c : record_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw std::runtime_error("'" + path.string() + "' has an unexpected header");
  std::vector<FunctionalRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FunctionalRecord r;
    auto fields = record_fields(r);
    std::stringstream ss(line);
    std::string cell;
    std::size_t i = 0;
    for (; std::getline(ss, cell, ','); ++i) {
      if (i >= fields.size()) throw std::runtime_error("too many columns in '" + path.string() + "'");
      *fields[i] = std::strtod(cell.c_str(), nullptr);
    }
    if (i != fields.size()) throw std::runtime_error("too few columns in '" + path.string() + "'");
    out.push_back(r);
  }
  return out;
}

void write_columns_csv(const fs::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("csv row width does not match header");
    write_row(out, row);
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return json::parse(in);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  const auto path = dir / "manifest.json";
  json j;
  std::vector<std::string> outputs;
  if (fs::exists(path)) {
    j = read_json(path);
    outputs = j.value("outputs", std::vector<std::string>{});
  } else {
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    j["start_time"] = m.start_time;
  }
  for (const auto& o : m.outputs)
    if (std::find(outputs.begin(), outputs.end(), o) == outputs.end()) outputs.push_back(o);
  j["outputs"] = outputs;
  j["end_time"] = m.end_time;
  j["status"] = m.status;
  write_json(path, j);
}

}  // namespace vwlab::io
