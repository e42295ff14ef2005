#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "vwlab/functionals.hpp"

namespace vwlab::io {

inline constexpr const char* kVersion = "0.1.0";

/// 17 significant digits, so the text round-trips to the same double.
std::string format_double(double x);

/// Column names of the records CSV, in order.
const std::vector<std::string>& record_columns();

void write_records_csv(const std::filesystem::path& path, std::span<const FunctionalRecord> records);
/// Reads the columns written by write_records_csv; other record fields stay zero.
std::vector<FunctionalRecord> read_records_csv(const std::filesystem::path& path);

void write_columns_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Null for non-finite values (JSON has no infinities).
nlohmann::json number_or_null(double x);

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);
/// Current UTC wall time, ISO 8601.
std::string utc_now();

struct Manifest {
  std::string config_hash;
  std::string version = kVersion;
  std::string start_time;
  std::string end_time;
  std::vector<std::string> outputs;
  std::string status;
};

/// Writes dir/manifest.json. An existing manifest is extended: its outputs
/// are kept, the new ones appended and the end time and status replaced.
void write_manifest(const std::filesystem::path& dir, const Manifest& m);

}  // namespace vwlab::io
