#include "sqlgrade/tabular.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "sqlgrade/hash.h"

namespace sqlgrade {

BlobDigest BlobDigest::of(std::string_view payload) { return BlobDigest{sha256(payload)}; }

std::string BlobDigest::hex() const { return to_hex(bytes.data(), bytes.size()); }

BlobDigest BlobDigest::from_hex(std::string_view hex) {
  BlobDigest d;
  if (hex.size() != d.bytes.size() * 2) throw std::invalid_argument("blob digest must be 64 hex digits");
  for (std::size_t i = 0; i < d.bytes.size(); ++i) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
    if (ec != std::errc() || ptr != hex.data() + 2 * i + 2) throw std::invalid_argument("bad hex in blob digest");
    d.bytes[i] = static_cast<std::uint8_t>(v);
  }
  return d;
}

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::kNull: return "null";
    case CellKind::kBoolean: return "boolean";
    case CellKind::kInteger: return "integer";
    case CellKind::kReal: return "real";
    case CellKind::kText: return "text";
    case CellKind::kBlob: return "blob";
  }
  return "unknown";
}

std::string format_real(double d) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, ec == std::errc() ? end : buf);
  if (s.find_first_of(".einn") == std::string::npos) s += ".0";
  return s;
}

CellValue CellValue::real(double d) {
  if (!std::isfinite(d)) return CellValue();
  return CellValue(Storage(std::in_place_type<double>, d));
}

std::string CellValue::to_display() const {
  switch (kind()) {
    case CellKind::kNull: return "NULL";
    case CellKind::kBoolean: return as_boolean() ? "true" : "false";
    case CellKind::kInteger: return std::to_string(as_integer());
    case CellKind::kReal: return format_real(as_real());
    case CellKind::kText: return as_text();
    case CellKind::kBlob: return "blob:" + as_blob().hex();
  }
  return {};
}

std::strong_ordering operator<=>(const CellValue& a, const CellValue& b) {
  if (auto c = a.value_.index() <=> b.value_.index(); c != 0) return c;
  switch (a.kind()) {
    case CellKind::kNull: return std::strong_ordering::equal;
    case CellKind::kBoolean: return a.as_boolean() <=> b.as_boolean();
    case CellKind::kInteger: return a.as_integer() <=> b.as_integer();
    case CellKind::kReal: {
      // Finite by construction, so the partial order is total here.
      const double x = a.as_real(), y = b.as_real();
      if (x < y) return std::strong_ordering::less;
      if (y < x) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    case CellKind::kText: return a.as_text().compare(b.as_text()) <=> 0;
    case CellKind::kBlob: return a.as_blob() <=> b.as_blob();
  }
  return std::strong_ordering::equal;
}

ResultTable::ResultTable(std::vector<std::string> column_names, std::vector<std::vector<CellValue>> columns,
                         std::size_t lossy_conversions)
    : column_names_(std::move(column_names)), columns_(std::move(columns)), lossy_conversions_(lossy_conversions) {
  if (column_names_.size() != columns_.size()) {
    throw std::invalid_argument("column name count does not match column count");
  }
  row_count_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& c : columns_) {
    if (c.size() != row_count_) throw std::invalid_argument("ragged columns in result table");
  }
}

ResultTable ResultTable::from_rows(std::vector<std::string> column_names,
                                   const std::vector<std::vector<CellValue>>& rows) {
  std::vector<std::vector<CellValue>> columns(column_names.size());
  for (auto& c : columns) c.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != column_names.size()) throw std::invalid_argument("row width does not match column count");
    for (std::size_t i = 0; i < r.size(); ++i) columns[i].push_back(r[i]);
  }
  return ResultTable(std::move(column_names), std::move(columns));
}

const std::vector<CellValue>& ResultTable::column(std::size_t idx) const {
  if (idx >= columns_.size()) throw std::out_of_range("column index out of range");
  return columns_[idx];
}

std::vector<CellValue> ResultTable::row(std::size_t r) const {
  if (r >= row_count_) throw std::out_of_range("row index out of range");
  std::vector<CellValue> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c[r]);
  return out;
}

TableBuilder::TableBuilder(std::vector<std::string> column_names)
    : names_(std::move(column_names)), columns_(names_.size()) {}

void TableBuilder::add_real(std::size_t col, double v) {
  if (!std::isfinite(v)) ++lossy_;
  push(col, CellValue::real(v));
}

ResultTable TableBuilder::build() && { return ResultTable(std::move(names_), std::move(columns_), lossy_); }

NormalizationPolicy NormalizationPolicy::exact() {
  NormalizationPolicy p;
  p.real_tolerance = {0.0, 0.0};
  p.text_trim = false;
  p.text_case_fold = false;
  p.integer_real_unification = false;
  return p;
}

void NormalizationPolicy::validate() const {
  const auto& t = real_tolerance;
  if (!(t.relative >= 0.0) || !(t.absolute >= 0.0) || !std::isfinite(t.absolute)) {
    throw std::invalid_argument("real tolerances must be finite and non-negative");
  }
  if (!(t.relative < 1.0)) throw std::invalid_argument("relative tolerance must be below 1");
}

namespace {

// Largest power of two not exceeding a (a > 0).
double pow2_floor(double a) {
  int e = 0;
  std::frexp(a, &e);
  return std::ldexp(1.0, e - 1);
}

double snap_real(double x, const RealTolerance& tol) {
  if (x == 0.0) return 0.0;
  double step = tol.absolute > 0.0 ? pow2_floor(tol.absolute) : 0.0;
  if (tol.relative > 0.0) {
    int binade = 0;
    std::frexp(x, &binade);  // |x| in [2^(binade-1), 2^binade)
    int rel_exp = 0;
    std::frexp(tol.relative, &rel_exp);  // floor(log2(relative)) == rel_exp - 1
    step = std::max(step, std::ldexp(1.0, binade - 1 + rel_exp - 1));
  }
  if (step == 0.0) return x;
  const double snapped = std::round(x / step) * step;
  if (!std::isfinite(snapped)) return x;
  return snapped == 0.0 ? 0.0 : snapped;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

CellValue normalize_cell(const CellValue& v, const NormalizationPolicy& policy) {
  switch (v.kind()) {
    case CellKind::kInteger:
      if (!policy.integer_real_unification) return v;
      return CellValue::real(snap_real(static_cast<double>(v.as_integer()), policy.real_tolerance));
    case CellKind::kReal:
      return CellValue::real(snap_real(v.as_real(), policy.real_tolerance));
    case CellKind::kText: {
      std::string_view s = v.as_text();
      if (policy.text_trim) {
        while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
      }
      std::string out(s);
      if (policy.text_case_fold) {
        for (auto& c : out) {
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
      }
      return CellValue::text(std::move(out));
    }
    default:
      return v;
  }
}

ColumnMultiset column_multiset(const ResultTable& t, std::size_t idx, const NormalizationPolicy& policy) {
  const auto& col = t.column(idx);
  ColumnMultiset out;
  out.reserve(col.size());
  for (const auto& c : col) out.push_back(normalize_cell(c, policy));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sqlgrade
