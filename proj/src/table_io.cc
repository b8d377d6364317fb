#include "sqlgrade/table_io.h"

#include <stdexcept>

namespace sqlgrade {

using nlohmann::json;

json cell_to_json(const CellValue& v) {
  switch (v.kind()) {
    case CellKind::kNull: return nullptr;
    case CellKind::kBoolean: return v.as_boolean();
    case CellKind::kInteger: return v.as_integer();
    case CellKind::kReal: return v.as_real();
    case CellKind::kText: return v.as_text();
    case CellKind::kBlob: return json{{"blob", v.as_blob().hex()}};
  }
  return nullptr;
}

CellValue cell_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return CellValue::null();
    case json::value_t::boolean: return CellValue::boolean(j.get<bool>());
    case json::value_t::number_integer: return CellValue::integer(j.get<std::int64_t>());
    case json::value_t::number_unsigned: {
      const auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) throw std::invalid_argument("integer cell out of range");
      return CellValue::integer(static_cast<std::int64_t>(u));
    }
    case json::value_t::number_float: return CellValue::real(j.get<double>());
    case json::value_t::string: return CellValue::text(j.get<std::string>());
    case json::value_t::object:
      if (j.size() == 1 && j.contains("blob") && j["blob"].is_string()) {
        return CellValue::blob_digest(BlobDigest::from_hex(j["blob"].get<std::string>()));
      }
      break;
    default: break;
  }
  throw std::invalid_argument("unsupported cell encoding: " + j.dump());
}

json table_to_json(const ResultTable& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < t.column_count(); ++c) row.push_back(cell_to_json(t.column(c)[r]));
    rows.push_back(std::move(row));
  }
  return json{{"columns", t.column_names()}, {"rows", std::move(rows)}, {"lossy_conversions", t.lossy_conversions()}};
}

ResultTable table_from_json(const json& j) {
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array() || !j.contains("rows") ||
      !j["rows"].is_array()) {
    throw std::invalid_argument("result table JSON needs 'columns' and 'rows' arrays");
  }
  std::vector<std::string> names;
  for (const auto& n : j["columns"]) {
    if (!n.is_string()) throw std::invalid_argument("column names must be strings");
    names.push_back(n.get<std::string>());
  }
  std::vector<std::vector<CellValue>> columns(names.size());
  for (const auto& row : j["rows"]) {
    if (!row.is_array() || row.size() != names.size()) throw std::invalid_argument("row width mismatch");
    for (std::size_t c = 0; c < names.size(); ++c) columns[c].push_back(cell_from_json(row[c]));
  }
  const std::size_t lossy = j.value("lossy_conversions", std::size_t{0});
  return ResultTable(std::move(names), std::move(columns), lossy);
}

json outcome_to_json(const EvalOutcome& o) {
  json pairs = json::array();
  for (const auto& [g, c] : o.matching.pairs) pairs.push_back({g, c});
  return json{{"ex", o.ex_exact},
              {"ex_b", o.ex_b},
              {"ex_f", o.ex_f},
              {"matching",
               {{"pairs", std::move(pairs)},
                {"unmatched_golden", o.matching.unmatched_golden},
                {"extra_candidate_count", o.matching.extra_candidate_count}}}};
}

}  // namespace sqlgrade
