#pragma once

// Run reports: per-sample records, aggregates that must be recomputable
// from the records, a config snapshot and the seed. Records can also be
// streamed to an append-only JSONL log so interrupted runs resume.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqlgrade/metrics.h"

namespace sqlgrade {

struct SampleRecord {
  std::string question_id;
  std::string db_id;
  std::optional<std::string> final_sql;
  /// "ok", "error", "timeout", or "no-sql" when no SQL was produced.
  std::string exec_status = "no-sql";
  std::optional<std::string> error;
  int ex_exact = 0;
  int ex_b = 0;
  double ex_f = 0.0;
  int attempts = 0;
  std::optional<std::int64_t> elapsed_ms;  // omitted for byte-stable reports
};

struct SkippedSample {
  std::string question_id;
  std::string reason;
};

struct RunReport {
  std::string mode;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<SampleRecord> records;  // dataset order
  std::vector<SkippedSample> skipped;
  std::optional<MetricMeans> aggregates;  // absent when there are no records
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Means over the records in order, computed exactly as mean_metrics does.
std::optional<MetricMeans> aggregate_records(const std::vector<SampleRecord>& records);

nlohmann::json record_to_json(const SampleRecord& r);
SampleRecord record_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const RunReport& report);
/// Throws ReportError when the document is malformed or its aggregates
/// differ from the recomputed ones.
RunReport report_from_json(const nlohmann::json& j);

/// Writes to a sibling temporary file and renames it into place.
void write_report(const std::filesystem::path& path, const RunReport& report);
RunReport load_report(const std::filesystem::path& path);

/// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Append-only JSONL record log. Thread-safe appends; each line is flushed.
class RecordLog {
 public:
  explicit RecordLog(const std::filesystem::path& path);

  /// Records already in the log, keyed by question id. A truncated final
  /// line (from a crash mid-write) is ignored.
  const std::map<std::string, SampleRecord>& existing() const { return existing_; }

  void append(const SampleRecord& r);

 private:
  std::map<std::string, SampleRecord> existing_;
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace sqlgrade
