#pragma once

// Shared helpers for the unit and acceptance tests: temporary directories,
// fixture databases, scripted generation clients and random tables.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "sqlgrade/dataset.h"
#include "sqlgrade/gen_client.h"
#include "sqlgrade/tabular.h"

namespace sqlgrade::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Runs a SQL script against a new database file. Throws on failure.
void create_db(const fs::path& path, const std::string& script);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// tests/data in the source tree.
fs::path data_dir();

/// Copies tests/data/school_budget.sql into a database at `path`.
void create_school_budget(const fs::path& path);

/// t(a INT, b TEXT) with rows (1, 'x'), (2, 'y').
void create_half_match_db(const fs::path& path);

inline CellValue I(std::int64_t v) { return CellValue::integer(v); }
inline CellValue R(double v) { return CellValue::real(v); }
inline CellValue T(std::string v) { return CellValue::text(std::move(v)); }
inline CellValue N() { return CellValue::null(); }

/// Replies come from a callback over (request, 0-based call index).
class ScriptedGenerator final : public TextGenerator {
 public:
  using Script = std::function<GenResult(const GenRequest&, std::size_t)>;
  explicit ScriptedGenerator(Script script) : script_(std::move(script)) {}

  GenResult generate(const GenRequest& request) override;

  std::size_t calls() const { return calls_; }
  std::vector<GenRequest> requests() const;

 private:
  Script script_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::vector<GenRequest> requests_;
};

/// A reply holding one fenced sql block.
std::string sql_reply(const std::string& sql, const std::string& thinking = "steps");

/// A judge reply with the given scores.
std::string scores_reply(const std::vector<double>& scores, const std::string& thinking = "judging");

/// Random table with values from a small alphabet so duplicate columns and
/// equal multisets are common. Columns may be exact copies of each other.
ResultTable random_table(std::mt19937_64& rng, std::size_t max_cols, std::size_t max_rows);

/// Candidate built from golden columns (shuffled rows, some columns
/// copied, some perturbed, some fresh).
ResultTable random_candidate_for(const ResultTable& golden, std::mt19937_64& rng, std::size_t max_cols);

/// Writes a canonical manifest for samples over one database file.
void write_manifest(const fs::path& manifest, const std::string& db_id, const fs::path& db_path,
                    const std::vector<Sample>& samples);

}  // namespace sqlgrade::testing
