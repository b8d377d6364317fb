#pragma once

// In-memory model of SQL execution results and the value normalization that
// every table comparison in the library goes through.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqlgrade {

/// SHA-256 of a blob payload. Raw blob bytes are never kept.
struct BlobDigest {
  std::array<std::uint8_t, 32> bytes{};

  static BlobDigest of(std::string_view payload);
  std::string hex() const;
  static BlobDigest from_hex(std::string_view hex);

  friend bool operator==(const BlobDigest&, const BlobDigest&) = default;
  friend auto operator<=>(const BlobDigest&, const BlobDigest&) = default;
};

struct Null {
  friend bool operator==(Null, Null) { return true; }
};

enum class CellKind : std::uint8_t { kNull, kBoolean, kInteger, kReal, kText, kBlob };

std::string_view to_string(CellKind kind);

/// Shortest round-trip decimal form; integral values keep a trailing ".0".
std::string format_real(double d);

/// One result cell. Reals are always finite: constructing a real from NaN or
/// an infinity yields null.
class CellValue {
 public:
  CellValue() = default;

  static CellValue null() { return CellValue(); }
  static CellValue boolean(bool b) { return CellValue(Storage(std::in_place_type<bool>, b)); }
  static CellValue integer(std::int64_t i) { return CellValue(Storage(std::in_place_type<std::int64_t>, i)); }
  static CellValue real(double d);
  static CellValue text(std::string s) { return CellValue(Storage(std::in_place_type<std::string>, std::move(s))); }
  static CellValue blob(std::string_view payload) { return blob_digest(BlobDigest::of(payload)); }
  static CellValue blob_digest(BlobDigest digest) { return CellValue(Storage(std::in_place_type<BlobDigest>, digest)); }

  CellKind kind() const { return static_cast<CellKind>(value_.index()); }
  bool is_null() const { return kind() == CellKind::kNull; }

  bool as_boolean() const { return std::get<bool>(value_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(value_); }
  double as_real() const { return std::get<double>(value_); }
  const std::string& as_text() const { return std::get<std::string>(value_); }
  const BlobDigest& as_blob() const { return std::get<BlobDigest>(value_); }

  /// Human-readable rendering (diagnostics and schema strings).
  std::string to_display() const;

  /// Total order: first by kind, then by payload.
  friend std::strong_ordering operator<=>(const CellValue& a, const CellValue& b);
  friend bool operator==(const CellValue& a, const CellValue& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

 private:
  using Storage = std::variant<Null, bool, std::int64_t, double, std::string, BlobDigest>;
  explicit CellValue(Storage v) : value_(std::move(v)) {}

  Storage value_;
};

/// Immutable column-major result table. Column names may repeat; a column
/// is identified by its position.
class ResultTable {
 public:
  ResultTable() = default;

  /// Throws std::invalid_argument if the columns are ragged or the name
  /// count differs from the column count.
  ResultTable(std::vector<std::string> column_names, std::vector<std::vector<CellValue>> columns,
              std::size_t lossy_conversions = 0);

  /// Row-major convenience constructor used by tests and the sandbox.
  static ResultTable from_rows(std::vector<std::string> column_names,
                               const std::vector<std::vector<CellValue>>& rows);

  std::size_t column_count() const { return columns_.size(); }
  std::size_t row_count() const { return row_count_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<CellValue>& column(std::size_t idx) const;
  const std::vector<std::vector<CellValue>>& columns() const { return columns_; }

  /// Number of non-finite reals that were turned into nulls during ingestion.
  std::size_t lossy_conversions() const { return lossy_conversions_; }

  /// Rows are materialized on demand; the table itself is column-major.
  std::vector<CellValue> row(std::size_t r) const;

  friend bool operator==(const ResultTable&, const ResultTable&) = default;

 private:
  std::vector<std::string> column_names_;
  std::vector<std::vector<CellValue>> columns_;
  std::size_t row_count_ = 0;
  std::size_t lossy_conversions_ = 0;
};

/// Accumulates rows from an engine, counting lossy real conversions.
class TableBuilder {
 public:
  explicit TableBuilder(std::vector<std::string> column_names);

  void add_null(std::size_t col) { push(col, CellValue::null()); }
  void add_integer(std::size_t col, std::int64_t v) { push(col, CellValue::integer(v)); }
  void add_real(std::size_t col, double v);
  void add_text(std::size_t col, std::string v) { push(col, CellValue::text(std::move(v))); }
  void add_blob(std::size_t col, std::string_view payload) { push(col, CellValue::blob(payload)); }

  std::size_t column_count() const { return columns_.size(); }
  ResultTable build() &&;

 private:
  void push(std::size_t col, CellValue v) { columns_[col].push_back(std::move(v)); }

  std::vector<std::string> names_;
  std::vector<std::vector<CellValue>> columns_;
  std::size_t lossy_ = 0;
};

struct RealTolerance {
  double relative = 1e-6;
  double absolute = 1e-9;
};

/// How cell values are canonicalized before comparison.
struct NormalizationPolicy {
  RealTolerance real_tolerance;
  bool text_trim = true;
  bool text_case_fold = false;
  bool integer_real_unification = true;

  /// Policy that leaves every value untouched.
  static NormalizationPolicy exact();

  /// Throws std::invalid_argument on negative or non-finite tolerances.
  void validate() const;
};

/// Canonical form of a cell under `policy`. Idempotent.
///
/// Reals are snapped to a power-of-two grid whose spacing is the larger of
/// the absolute-tolerance step and the relative-tolerance step of the
/// value's binade, so the snapped value is itself a grid point.
CellValue normalize_cell(const CellValue& v, const NormalizationPolicy& policy);

/// Sorted list of normalized cells; two columns hold the same multiset iff
/// their ColumnMultisets compare equal.
using ColumnMultiset = std::vector<CellValue>;

/// Throws std::out_of_range if idx is not a column of t.
ColumnMultiset column_multiset(const ResultTable& t, std::size_t idx, const NormalizationPolicy& policy);

}  // namespace sqlgrade
