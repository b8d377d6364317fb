#pragma once

// Read-only execution of gold and candidate SQL with deadlines and row caps.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "sqlgrade/tabular.h"

namespace sqlgrade {

enum class DialectFamily { kSqlite, kMysql, kOther };

/// "sqlite", "sqlite3" and "SQLite" map to kSqlite; "mysql"/"mariadb" to
/// kMysql; anything else is kOther (resolved through the driver registry).
DialectFamily dialect_family(std::string_view tag);

/// Name used in prompts, e.g. "SQLite".
std::string dialect_display_name(std::string_view tag);

struct DatabaseRef {
  std::string dialect = "sqlite";
  std::string locator;  // file path for sqlite, connection descriptor otherwise
  bool read_only = true;
};

enum class ExecStatus { kOk, kError, kTimeout };

std::string_view to_string(ExecStatus s);

struct ExecOutcome {
  ExecStatus status = ExecStatus::kError;
  std::optional<ResultTable> table;  // present iff status == kOk
  std::optional<std::string> error_text;
  std::chrono::microseconds elapsed{0};
  bool truncated = false;

  bool ok() const { return status == ExecStatus::kOk; }
};

struct ExecOptions {
  std::chrono::milliseconds timeout{30'000};
  std::size_t row_cap = 100'000;
};

/// One open connection. Not shared between threads.
class Connection {
 public:
  virtual ~Connection() = default;
  virtual ExecOutcome run(std::string_view sql, const ExecOptions& options) = 0;
};

class Driver {
 public:
  virtual ~Driver() = default;
  /// Throws std::runtime_error when the database cannot be opened.
  virtual std::unique_ptr<Connection> connect(const DatabaseRef& db) = 0;
};

/// Opens single-file SQLite databases; read_only refs are opened with
/// SQLITE_OPEN_READONLY and every statement must pass sqlite3_stmt_readonly.
class SqliteDriver final : public Driver {
 public:
  std::unique_ptr<Connection> connect(const DatabaseRef& db) override;
};

class DriverRegistry {
 public:
  /// Registry with the SQLite driver installed for the sqlite family.
  static DriverRegistry with_defaults();

  void install(DialectFamily family, std::shared_ptr<Driver> driver);
  /// Registers a driver for an exact (lowercased) dialect tag of family kOther.
  void install(std::string tag, std::shared_ptr<Driver> driver);
  std::shared_ptr<Driver> find(std::string_view dialect) const;

 private:
  std::map<DialectFamily, std::shared_ptr<Driver>> by_family_;
  std::map<std::string, std::shared_ptr<Driver>, std::less<>> by_tag_;
};

struct SandboxOptions {
  ExecOptions exec;
  /// Concurrent executions allowed per database locator.
  std::ptrdiff_t max_concurrent_per_db = 4;
};

/// Thread-safe entry point. Every call opens its own connection; a
/// per-locator semaphore bounds concurrent executions on one database.
class Sandbox {
 public:
  explicit Sandbox(SandboxOptions options = {}, DriverRegistry registry = DriverRegistry::with_defaults());

  ExecOutcome execute(const DatabaseRef& db, std::string_view sql) const;
  ExecOutcome execute(const DatabaseRef& db, std::string_view sql, const ExecOptions& options) const;

  const SandboxOptions& options() const { return options_; }

 private:
  using Gate = std::counting_semaphore<1 << 16>;
  Gate& gate_for(const std::string& locator) const;

  SandboxOptions options_;
  DriverRegistry registry_;
  mutable std::mutex gates_mu_;
  mutable std::map<std::string, std::unique_ptr<Gate>> gates_;
};

}  // namespace sqlgrade
