#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capsat/capacitory_metrics.hpp"

namespace capsat {

inline constexpr int kRecordsFormatVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

/// Column order of records.csv (format version 1).
const std::vector<std::string>& record_columns();

/// One header line followed by one line per record; floats with 17
/// significant digits, absent optional values as empty fields.
std::string records_to_csv(const std::vector<SaturationRecord>& records);
std::vector<SaturationRecord> records_from_csv(const std::string& text);

struct Quartiles {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
Quartiles summarize(std::vector<double> values);

/// Summary block: per-metric quartiles, counts and the fraction of records
/// with tau > 10. Computed from the records alone.
nlohmann::json summarize_records(const std::vector<SaturationRecord>& records,
                                 std::size_t skipped_misclassified, std::size_t failures);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

/// {config_hash, seed, tool_version, records_format}. The hash covers the
/// canonical (sorted-key) serialisation of the effective configuration.
nlohmann::json provenance(const nlohmann::json& config, std::uint64_t seed);

/// JSON text with a trailing newline, stable across runs.
std::string dump_json(const nlohmann::json& doc);

}  // namespace capsat
