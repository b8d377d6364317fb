#pragma once

// Gold results computed once before training or evaluation and persisted
// as a directory of per-sample table files plus a JSON manifest.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sqlgrade/dataset.h"
#include "sqlgrade/sandbox.h"
#include "sqlgrade/tabular.h"

namespace sqlgrade {

struct GoldenEntry {
  std::string gold_sql_hash;  // sha256 of the gold SQL text
  ResultTable table;

  friend bool operator==(const GoldenEntry&, const GoldenEntry&) = default;
};

class GoldenCache {
 public:
  using Key = std::pair<std::string, std::string>;  // (db_id, question_id)

  const GoldenEntry* find(const std::string& db_id, const std::string& question_id) const;
  /// Entry only when its stored hash matches `gold_sql`.
  const GoldenEntry* find_valid(const std::string& db_id, const std::string& question_id,
                                const std::string& gold_sql) const;
  void put(const std::string& db_id, const std::string& question_id, GoldenEntry entry);

  std::size_t size() const { return entries_.size(); }
  const std::map<Key, GoldenEntry>& entries() const { return entries_; }

  /// Writes manifest.json and tables/<key-hash>.json under dir.
  void save(const std::filesystem::path& dir) const;
  /// Throws std::runtime_error when the manifest or a table file is unreadable.
  static GoldenCache load(const std::filesystem::path& dir);

 private:
  std::map<Key, GoldenEntry> entries_;
};

struct GoldenFailure {
  std::string db_id;
  std::string question_id;
  std::string error;
};

struct GoldenBuildReport {
  std::size_t hits = 0;        // entries reused because the gold SQL hash matched
  std::size_t executions = 0;  // gold queries actually run
  std::vector<GoldenFailure> failures;
};

struct GoldenBuildResult {
  GoldenCache cache;
  GoldenBuildReport report;
};

/// Reuses entries of `previous` whose gold SQL hash is unchanged and runs
/// the rest. Failing samples are excluded from the cache and reported.
GoldenBuildResult build_golden_cache(const std::vector<Sample>& samples,
                                     const std::map<std::string, DatabaseRef>& databases, const Sandbox& sandbox,
                                     const GoldenCache* previous = nullptr, std::size_t workers = 1);

}  // namespace sqlgrade
