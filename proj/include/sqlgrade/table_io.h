#pragma once

#include <json.hpp>

#include "sqlgrade/metrics.h"
#include "sqlgrade/tabular.h"

namespace sqlgrade {

/// {"columns": [...], "rows": [[...], ...], "lossy_conversions": n}.
/// Integers and reals keep their JSON number kind; blobs are
/// {"blob": "<sha256 hex>"}.
nlohmann::json table_to_json(const ResultTable& t);

/// Throws std::invalid_argument on malformed input.
ResultTable table_from_json(const nlohmann::json& j);

nlohmann::json cell_to_json(const CellValue& v);
CellValue cell_from_json(const nlohmann::json& j);

nlohmann::json outcome_to_json(const EvalOutcome& o);

}  // namespace sqlgrade
