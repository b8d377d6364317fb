#include "sqlgrade/sandbox.h"

#include <sqlite3.h>

#include <filesystem>
#include <stdexcept>

#include "sqlgrade/sql_text.h"

namespace sqlgrade {

DialectFamily dialect_family(std::string_view tag) {
  const auto t = ascii_lower(tag);
  if (t == "sqlite" || t == "sqlite3") return DialectFamily::kSqlite;
  if (t == "mysql" || t == "mariadb") return DialectFamily::kMysql;
  return DialectFamily::kOther;
}

std::string dialect_display_name(std::string_view tag) {
  switch (dialect_family(tag)) {
    case DialectFamily::kSqlite: return "SQLite";
    case DialectFamily::kMysql: return ascii_lower(tag) == "mariadb" ? "MariaDB" : "MySQL";
    case DialectFamily::kOther: break;
  }
  return std::string(tag);
}

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::kOk: return "ok";
    case ExecStatus::kError: return "error";
    case ExecStatus::kTimeout: return "timeout";
  }
  return "error";
}

namespace {

using Clock = std::chrono::steady_clock;

ExecOutcome failure(ExecStatus status, std::string text) {
  ExecOutcome out;
  out.status = status;
  out.error_text = std::move(text);
  return out;
}

struct Deadline {
  Clock::time_point at;
  bool expired() const { return Clock::now() >= at; }
};

int progress_callback(void* arg) { return static_cast<Deadline*>(arg)->expired() ? 1 : 0; }

// True when the text after the first statement holds nothing but
// semicolons, whitespace and comments.
bool only_trivia(std::string_view rest) {
  for (const auto& t : tokenize_sql(rest)) {
    if (!(t.kind == SqlTokenKind::kPunct && t.text == ";")) return false;
  }
  return true;
}

class SqliteConnection final : public Connection {
 public:
  SqliteConnection(sqlite3* db, bool read_only) : db_(db), read_only_(read_only) {}
  ~SqliteConnection() override { sqlite3_close_v2(db_); }
  SqliteConnection(const SqliteConnection&) = delete;
  SqliteConnection& operator=(const SqliteConnection&) = delete;

  ExecOutcome run(std::string_view sql, const ExecOptions& options) override {
    Deadline deadline{Clock::now() + options.timeout};
    sqlite3_progress_handler(db_, 1000, &progress_callback, &deadline);
    struct ResetHandler {
      sqlite3* db;
      ~ResetHandler() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
    } reset{db_};

    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
    std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(raw, &sqlite3_finalize);
    if (rc != SQLITE_OK) {
      if (rc == SQLITE_INTERRUPT && deadline.expired()) return failure(ExecStatus::kTimeout, "query timed out");
      return failure(ExecStatus::kError, sqlite3_errmsg(db_));
    }
    if (!stmt) return failure(ExecStatus::kError, "empty statement");
    const char* end = sql.data() + sql.size();
    if (tail != nullptr && tail < end && !only_trivia(std::string_view(tail, static_cast<std::size_t>(end - tail)))) {
      return failure(ExecStatus::kError, "multiple statements are not allowed");
    }
    if (read_only_ && !sqlite3_stmt_readonly(stmt.get())) {
      return failure(ExecStatus::kError, "mutation rejected: statement modifies the database");
    }

    const int ncols = sqlite3_column_count(stmt.get());
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(ncols));
    for (int c = 0; c < ncols; ++c) {
      const char* name = sqlite3_column_name(stmt.get(), c);
      names.emplace_back(name ? name : "");
    }
    TableBuilder builder(std::move(names));
    ExecOutcome out;
    std::size_t rows = 0;
    while (true) {
      rc = sqlite3_step(stmt.get());
      if (rc == SQLITE_DONE) break;
      if (rc != SQLITE_ROW) {
        if ((rc == SQLITE_INTERRUPT || sqlite3_errcode(db_) == SQLITE_INTERRUPT) && deadline.expired()) {
          return failure(ExecStatus::kTimeout, "query timed out");
        }
        return failure(ExecStatus::kError, sqlite3_errmsg(db_));
      }
      if (rows == options.row_cap) {
        out.truncated = true;
        break;
      }
      for (int c = 0; c < ncols; ++c) {
        const auto col = static_cast<std::size_t>(c);
        switch (sqlite3_column_type(stmt.get(), c)) {
          case SQLITE_INTEGER: builder.add_integer(col, sqlite3_column_int64(stmt.get(), c)); break;
          case SQLITE_FLOAT: builder.add_real(col, sqlite3_column_double(stmt.get(), c)); break;
          case SQLITE_TEXT: {
            const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), c));
            builder.add_text(col, std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c))));
            break;
          }
          case SQLITE_BLOB: {
            const auto* p = static_cast<const char*>(sqlite3_column_blob(stmt.get(), c));
            const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c));
            builder.add_blob(col, p ? std::string_view(p, n) : std::string_view());
            break;
          }
          default: builder.add_null(col);
        }
      }
      ++rows;
    }
    out.status = ExecStatus::kOk;
    out.table = std::move(builder).build();
    return out;
  }

 private:
  sqlite3* db_;
  bool read_only_;
};

}  // namespace

std::unique_ptr<Connection> SqliteDriver::connect(const DatabaseRef& db) {
  if (!std::filesystem::exists(db.locator)) {
    throw std::runtime_error("database file not found: " + db.locator);
  }
  sqlite3* handle = nullptr;
  const int flags = (db.read_only ? SQLITE_OPEN_READONLY : SQLITE_OPEN_READWRITE) | SQLITE_OPEN_NOMUTEX;
  const int rc = sqlite3_open_v2(db.locator.c_str(), &handle, flags, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = handle ? sqlite3_errmsg(handle) : sqlite3_errstr(rc);
    sqlite3_close_v2(handle);
    throw std::runtime_error("cannot open database " + db.locator + ": " + msg);
  }
  sqlite3_busy_timeout(handle, 5000);
  return std::make_unique<SqliteConnection>(handle, db.read_only);
}

DriverRegistry DriverRegistry::with_defaults() {
  DriverRegistry r;
  r.install(DialectFamily::kSqlite, std::make_shared<SqliteDriver>());
  return r;
}

void DriverRegistry::install(DialectFamily family, std::shared_ptr<Driver> driver) {
  by_family_[family] = std::move(driver);
}

void DriverRegistry::install(std::string tag, std::shared_ptr<Driver> driver) {
  by_tag_[ascii_lower(tag)] = std::move(driver);
}

std::shared_ptr<Driver> DriverRegistry::find(std::string_view dialect) const {
  if (auto it = by_tag_.find(ascii_lower(dialect)); it != by_tag_.end()) return it->second;
  if (auto it = by_family_.find(dialect_family(dialect)); it != by_family_.end()) return it->second;
  return nullptr;
}

Sandbox::Sandbox(SandboxOptions options, DriverRegistry registry)
    : options_(options), registry_(std::move(registry)) {
  if (options_.max_concurrent_per_db < 1) throw std::invalid_argument("max_concurrent_per_db must be >= 1");
}

Sandbox::Gate& Sandbox::gate_for(const std::string& locator) const {
  std::lock_guard lock(gates_mu_);
  auto& g = gates_[locator];
  if (!g) g = std::make_unique<Gate>(options_.max_concurrent_per_db);
  return *g;
}

ExecOutcome Sandbox::execute(const DatabaseRef& db, std::string_view sql) const {
  return execute(db, sql, options_.exec);
}

ExecOutcome Sandbox::execute(const DatabaseRef& db, std::string_view sql, const ExecOptions& options) const {
  const auto start = Clock::now();
  auto finish = [&](ExecOutcome out) {
    out.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
    return out;
  };

  if (db.read_only) {
    switch (classify_statement(sql)) {
      case StatementClass::kMutation:
        return finish(failure(ExecStatus::kError, "mutation rejected: statement modifies the database"));
      case StatementClass::kMultiple:
        return finish(failure(ExecStatus::kError, "multiple statements are not allowed"));
      case StatementClass::kEmpty:
        return finish(failure(ExecStatus::kError, "empty statement"));
      default:
        break;
    }
  }
  auto driver = registry_.find(db.dialect);
  if (!driver) return finish(failure(ExecStatus::kError, "no driver registered for dialect '" + db.dialect + "'"));

  auto& gate = gate_for(db.locator);
  gate.acquire();
  struct Release {
    Gate& g;
    ~Release() { g.release(); }
  } release{gate};

  std::unique_ptr<Connection> conn;
  try {
    conn = driver->connect(db);
  } catch (const std::exception& e) {
    return finish(failure(ExecStatus::kError, e.what()));
  }
  return finish(conn->run(sql, options));
}

}  // namespace sqlgrade
