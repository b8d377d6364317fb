#pragma once

// Generate-and-judge selection: sample until K distinct executable
// candidates exist (or the attempt cap is hit), score the set repeatedly
// with the same model, and return the best mean score.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqlgrade/dataset.h"
#include "sqlgrade/gen_client.h"
#include "sqlgrade/metrics.h"
#include "sqlgrade/sandbox.h"

namespace sqlgrade {

struct VerbalConfig {
  int k_required = 10;
  int attempt_cap = 200;
  int judge_repeats = 20;
  bool clamp = true;
  bool z_normalize = false;
  std::uint64_t tie_break_seed = 0;

  /// Generation failures that survive the retry policy count as attempts.
  /// When false they are bounded separately by max_transport_failures.
  bool transport_errors_consume_attempts = true;
  int max_transport_failures = 200;

  /// Extra judge calls after an unparseable or failed scoring reply.
  int judge_parse_retries = 3;

  RetryPolicy retry;
  GenRequest generation;  // model and decoding parameters; prompt is filled in
  GenRequest judging;

  /// Throws std::invalid_argument unless 1 <= k_required <= attempt_cap and
  /// judge_repeats >= 1.
  void validate() const;
};

struct Candidate {
  std::string sql;
  std::string normalized_sql;
  ExecOutcome exec;
  int attempt_index = 0;
  std::vector<double> scores;
  double mean_score = 0.0;
  double selection_score = 0.0;  // mean_score, z-normalized when enabled
};

enum class AttemptOutcome { kRetained, kDuplicate, kNoSqlBlock, kNotExecutable, kGenerationError };

std::string_view to_string(AttemptOutcome o);

struct AttemptRecord {
  int index = 0;          // 0-based sequence number of the generation call
  bool counted = true;    // consumed one of the attempt_cap attempts
  AttemptOutcome outcome = AttemptOutcome::kGenerationError;
  std::optional<std::string> sql;
  std::string detail;
};

struct JudgeCall {
  int repeat = 0;
  int tries = 0;
  std::optional<std::vector<double>> scores;  // absent: recorded gap
  std::string last_error;
};

struct SelectionDraw {
  std::vector<std::size_t> tied;
  std::size_t chosen = 0;
  std::uint64_t seed = 0;
};

struct CandidateGroup {
  std::vector<Candidate> candidates;
  int attempts_used = 0;
  std::optional<std::size_t> selected_index;
  std::vector<AttemptRecord> attempts;
  std::vector<JudgeCall> judge_calls;
  std::optional<SelectionDraw> draw;
  bool judge_failed = false;  // every judge call failed; uniform scores used
};

class ScoreParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class JudgeError : public std::runtime_error {
 public:
  JudgeError(const std::string& what, std::vector<JudgeCall> calls)
      : std::runtime_error(what), calls(std::move(calls)) {}
  std::vector<JudgeCall> calls;  // the failed calls, for the trace
};

/// Samples candidates with `prompt` until k_required distinct executable
/// SQLs are retained or attempt_cap attempts are used.
CandidateGroup sample_candidates(TextGenerator& client, const std::string& prompt, const DatabaseRef& db,
                                 const Sandbox& sandbox, const VerbalConfig& cfg);

/// Reals from the last <scores>...</scores> block outside think blocks,
/// separated by commas and/or whitespace. Throws ScoreParseError unless
/// exactly expected_n finite numbers are found.
std::vector<double> parse_scores(const std::string& judge_output, std::size_t expected_n, bool clamp = true);

/// Issues judge_repeats scoring calls with `score_prompt`, fills scores,
/// mean_score and selection_score. Throws std::invalid_argument for an
/// empty group and JudgeError when every call fails.
CandidateGroup judge(TextGenerator& client, const std::string& score_prompt, CandidateGroup group,
                     const VerbalConfig& cfg);

/// Argmax of selection_score; exact ties drawn uniformly with a generator
/// seeded from cfg.tie_break_seed. Records selected_index and the draw.
/// Throws std::invalid_argument for an empty group.
const std::string& select(CandidateGroup& group, const VerbalConfig& cfg);

/// Population z-scores; all zeros when the spread is zero.
std::vector<double> z_scores(const std::vector<double>& values);

struct PipelineInputs {
  const Sample* sample = nullptr;
  const DatabaseRef* db = nullptr;
  std::string schema_text;
  const ResultTable* golden = nullptr;  // optional
  EvalConfig eval;
};

struct PipelineResult {
  std::optional<std::string> final_sql;
  CandidateGroup group;
  std::optional<EvalOutcome> eval;
  std::optional<ExecOutcome> final_exec;
  std::optional<std::string> failure;
};

/// Prompt assembly, sampling, judging and selection for one sample. The
/// tie-break seed is mixed with the question id so samples draw
/// independently. A judging failure falls back to uniform scores.
PipelineResult run_pipeline(const PipelineInputs& in, TextGenerator& client, const Sandbox& sandbox,
                            const VerbalConfig& cfg);

/// Trace document: every attempt, score vector, and the selection draw.
/// Contains no timings, so it is byte-stable for deterministic inputs.
nlohmann::json trace_to_json(const PipelineResult& result, const std::string& question_id);

/// splitmix64 finalizer over seed and an FNV-1a hash of `key`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace sqlgrade
