#pragma once

// Evaluation runs over a dataset: replaying a predictions file, zero-shot
// generation, or the verbal generate-and-judge pipeline.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "sqlgrade/dataset.h"
#include "sqlgrade/gen_client.h"
#include "sqlgrade/golden_cache.h"
#include "sqlgrade/report.h"
#include "sqlgrade/verbal_rl.h"

namespace sqlgrade {

enum class EvalMode { kZeroShot, kVerbalRl, kPredictions };

std::string_view to_string(EvalMode m);
/// "zero-shot", "verbal-rl", "file-of-predictions"; throws std::invalid_argument.
EvalMode parse_eval_mode(std::string_view s);

struct RunConfig {
  EvalMode mode = EvalMode::kPredictions;
  EvalConfig eval;
  std::size_t workers = 1;
  bool record_timing = true;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> log_path;   // append-only resume log
  std::optional<std::filesystem::path> trace_dir;  // verbal-rl traces, one JSON per sample
  GenRequest zero_shot;                            // model and decoding for zero-shot
  RetryPolicy retry;
  VerbalConfig verbal;
  nlohmann::json config_snapshot = nlohmann::json::object();
};

struct RunInputs {
  const Dataset* dataset = nullptr;
  const GoldenCache* cache = nullptr;
  const Sandbox* sandbox = nullptr;
  TextGenerator* client = nullptr;                            // zero-shot and verbal-rl
  const std::map<std::string, std::string>* predictions = nullptr;  // question_id -> SQL
  /// db_id -> schema string; databases missing here are profiled on demand.
  const std::map<std::string, std::string>* schemas = nullptr;
};

/// One record per sample with a valid gold cache entry (others are listed
/// as skipped). Per-sample failures become records and never abort the
/// run. Samples already present in the resume log are not re-run.
RunReport run_eval(const RunInputs& inputs, const RunConfig& config);

/// Predictions as a JSON object {question_id: sql} or JSONL lines
/// {"question_id": ..., "sql": ...}. Throws std::runtime_error.
std::map<std::string, std::string> load_predictions(const std::filesystem::path& path);

}  // namespace sqlgrade
