#pragma once

// Database introspection and the enriched schema string used in prompts:
// CREATE TABLE blocks annotated with MIN/MAX for numeric columns and the
// three most frequent values for text columns, key clauses last.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sqlgrade/sandbox.h"
#include "sqlgrade/tabular.h"

namespace sqlgrade {

struct NumericStats {
  CellValue min;
  CellValue max;
};

/// Up to three values, most frequent first; equal counts in ascending
/// (binary collation) order.
struct TextStats {
  std::vector<std::string> modes;
};

using ColumnStats = std::variant<std::monostate, NumericStats, TextStats>;

struct ColumnRef {
  std::string table;
  std::string column;
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

struct ColumnProfile {
  std::string name;
  std::string declared_type;
  bool is_pk = false;
  std::optional<ColumnRef> fk_target;
  ColumnStats stats;
  std::optional<std::string> description;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string ref_table;
  std::vector<std::string> ref_columns;
};

struct TableProfile {
  std::string name;
  std::vector<ColumnProfile> columns;
  std::vector<std::string> primary_key;  // in key order
  std::vector<ForeignKey> foreign_keys;
};

struct SchemaProfile {
  std::vector<TableProfile> tables;  // catalog order
  std::string rendered;
};

enum class ColumnClass { kNumeric, kText, kNone };

/// Classification from declared type affinity; nullopt when the declared
/// type carries no affinity (empty or BLOB-like without a type name) and
/// the values have to be inspected.
std::optional<ColumnClass> classify_declared_type(std::string_view declared_type);

/// Profiles every base table of a SQLite database. Throws
/// std::runtime_error when the database cannot be read.
SchemaProfile profile(const DatabaseRef& db);

/// Table name -> column names, catalog order.
std::map<std::string, std::vector<std::string>> catalog(const DatabaseRef& db);

std::string render(const SchemaProfile& profile);

/// Inlines per-column descriptions (table -> column -> text); matching is
/// case-insensitive. Re-renders.
SchemaProfile attach_descriptions(SchemaProfile profile,
                                  const std::map<std::string, std::map<std::string, std::string>>& descriptions);

struct SubsetPolicy {
  std::size_t budget = std::numeric_limits<std::size_t>::max();  // max rendered characters
  std::size_t extra_sample_count = 0;
  std::uint64_t rng_seed = 0;
};

/// Keeps every key column, every column named by an identifier in
/// `gold_sql`, and up to extra_sample_count further columns drawn with the
/// seeded generator (trailing draws are dropped while the rendering exceeds
/// the budget). Returns the profile unchanged when it already fits.
SchemaProfile subset(const SchemaProfile& profile, const std::string& gold_sql, const SubsetPolicy& policy);

/// Table and column names recovered from a rendered schema string.
std::vector<std::pair<std::string, std::vector<std::string>>> parse_schema_headers(const std::string& rendered);

nlohmann::json profile_to_json(const SchemaProfile& profile);

}  // namespace sqlgrade
