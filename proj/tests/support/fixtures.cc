#include "fixtures.h"

#include <sqlite3.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sqlgrade/rng.h"

namespace sqlgrade::testing {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "sqlgrade-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void create_db(const fs::path& path, const std::string& script) {
  sqlite3* db = nullptr;
  if (sqlite3_open(path.string().c_str(), &db) != SQLITE_OK) {
    sqlite3_close(db);
    throw std::runtime_error("cannot create " + path.string());
  }
  char* err = nullptr;
  const int rc = sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err);
  std::string message = err ? err : "";
  sqlite3_free(err);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw std::runtime_error("fixture script failed: " + message);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

fs::path data_dir() { return fs::path(SQLGRADE_TEST_DATA_DIR); }

void create_school_budget(const fs::path& path) { create_db(path, read_text(data_dir() / "school_budget.sql")); }

void create_half_match_db(const fs::path& path) {
  create_db(path, "CREATE TABLE t (a INT, b TEXT); INSERT INTO t VALUES (1, 'x'), (2, 'y');");
}

GenResult ScriptedGenerator::generate(const GenRequest& request) {
  std::size_t index;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    index = calls_++;
  }
  return script_(request, index);
}

std::vector<GenRequest> ScriptedGenerator::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string sql_reply(const std::string& sql, const std::string& thinking) {
  return "<think>\n" + thinking + "\n</think>\n```sql\n" + sql + "\n```";
}

std::string scores_reply(const std::vector<double>& scores, const std::string& thinking) {
  std::string s = "<think>\n" + thinking + "\n</think>\n<scores>\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(scores[i]);
  }
  return s + "\n</scores>";
}

namespace {

CellValue random_cell(std::mt19937_64& rng) {
  switch (uniform_index(rng, 5)) {
    case 0:
      return CellValue::integer(static_cast<std::int64_t>(uniform_index(rng, 3)));
    case 1:
      return CellValue::real(static_cast<double>(uniform_index(rng, 3)) + 0.5);
    case 2:
      return CellValue::text(std::string(1, static_cast<char>('a' + uniform_index(rng, 2))));
    case 3:
      return CellValue::null();
    default:
      return CellValue::integer(static_cast<std::int64_t>(uniform_index(rng, 2)));
  }
}

std::vector<CellValue> random_column(std::mt19937_64& rng, std::size_t rows) {
  std::vector<CellValue> col;
  for (std::size_t r = 0; r < rows; ++r) col.push_back(random_cell(rng));
  return col;
}

}  // namespace

ResultTable random_table(std::mt19937_64& rng, std::size_t max_cols, std::size_t max_rows) {
  const std::size_t cols = uniform_index(rng, max_cols + 1);
  const std::size_t rows = uniform_index(rng, max_rows + 1);
  std::vector<std::vector<CellValue>> columns;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) {
    if (c > 0 && uniform_index(rng, 3) == 0) {
      columns.push_back(columns[uniform_index(rng, c)]);  // duplicate column
    } else {
      columns.push_back(random_column(rng, rows));
    }
    names.push_back("c" + std::to_string(c));
  }
  return ResultTable(std::move(names), std::move(columns));
}

ResultTable random_candidate_for(const ResultTable& golden, std::mt19937_64& rng, std::size_t max_cols) {
  const std::size_t rows = uniform_index(rng, 6) == 0 ? uniform_index(rng, golden.row_count() + 2) : golden.row_count();
  const std::size_t cols = uniform_index(rng, max_cols + 1);
  std::vector<std::size_t> perm(rows);
  for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
  seeded_shuffle(perm, rng);

  std::vector<std::vector<CellValue>> columns;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<CellValue> col;
    const auto pick = uniform_index(rng, 4);
    if (golden.column_count() > 0 && rows == golden.row_count() && pick < 3) {
      const auto& src = golden.column(uniform_index(rng, golden.column_count()));
      for (std::size_t r = 0; r < rows; ++r) col.push_back(src[perm[r]]);
      if (pick == 2 && rows > 0) col[uniform_index(rng, rows)] = random_cell(rng);  // maybe perturbed
    } else {
      col = random_column(rng, rows);
    }
    columns.push_back(std::move(col));
    names.push_back("k" + std::to_string(c));
  }
  return ResultTable(std::move(names), std::move(columns));
}

void write_manifest(const fs::path& manifest, const std::string& db_id, const fs::path& db_path,
                    const std::vector<Sample>& samples) {
  nlohmann::json doc;
  doc["name"] = "fixture";
  doc["database_root"] = ".";
  doc["databases"][db_id] = {{"path", fs::absolute(db_path).string()}, {"dialect", "sqlite"}};
  doc["samples"] = nlohmann::json::array();
  for (const auto& s : samples) {
    nlohmann::json js{{"question_id", s.question_id},
                      {"question", s.question},
                      {"db_id", s.db_id},
                      {"gold_sql", s.gold_sql}};
    if (s.context) js["context"] = *s.context;
    doc["samples"].push_back(js);
  }
  write_text(manifest, doc.dump(2));
}

}  // namespace sqlgrade::testing
