#pragma once

// Dataset manifests: one canonical JSON document per dataset, plus adapters
// for native Spider and BIRD question files.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqlgrade/sandbox.h"

namespace sqlgrade {

struct Sample {
  std::string question_id;
  std::string question;
  std::optional<std::string> context;
  std::string db_id;
  std::string dialect = "sqlite";
  std::string gold_sql;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
  std::map<std::string, DatabaseRef> databases;  // keyed by db_id

  const Sample* find(std::string_view question_id) const;
  /// Throws std::out_of_range for an unknown db_id.
  const DatabaseRef& database(const std::string& db_id) const;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ManifestFormat { kAuto, kCanonical, kSpider, kBird };

struct LoadOptions {
  ManifestFormat format = ManifestFormat::kAuto;
  /// Overrides the manifest's database_root (and is required for nothing:
  /// native files default to the manifest's directory).
  std::optional<std::filesystem::path> database_root;
  std::string default_dialect = "sqlite";
};

/// Parses a manifest and resolves every referenced database file.
/// Throws ManifestError when the document is malformed, a question id
/// repeats, or a database file is missing.
Dataset load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});

struct FilterEntry {
  std::string question_id;
  std::string db_id;
  std::string reason;
};

struct IngestResult {
  Dataset dataset;  // only samples that passed the filters
  std::vector<FilterEntry> filtered;
};

struct IngestOptions {
  LoadOptions load;
  bool check_identifiers = true;
  bool execute_gold = true;
};

/// load_manifest plus filtering: samples whose qualified column references
/// do not resolve against the schema, or whose gold SQL does not execute,
/// are dropped and listed in `filtered`.
IngestResult ingest(const std::filesystem::path& manifest, const Sandbox& sandbox, const IngestOptions& options = {});

/// Unresolved-reference diagnostics for `sql` against a table -> columns
/// catalog (names compared case-insensitively). Empty when everything
/// resolves.
std::vector<std::string> unresolved_references(const std::string& sql,
                                               const std::map<std::string, std::vector<std::string>>& catalog);

}  // namespace sqlgrade
