#pragma once

// Majority voting over sampled candidates and the ensemble-size sweep.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqlgrade/metrics.h"
#include "sqlgrade/sandbox.h"

namespace sqlgrade {

enum class VoteEquivalence {
  kResultTable,    // ex_exact = 1 between the two result tables, either direction
  kNormalizedSql,  // identical normalize_sql text
};

std::string_view to_string(VoteEquivalence e);
/// "result-table" or "normalized-sql"; throws std::invalid_argument.
VoteEquivalence parse_vote_equivalence(std::string_view s);

struct VoteConfig {
  /// Vote over the first group_size candidates; absent means all of them.
  std::optional<std::size_t> group_size;
  VoteEquivalence equivalence = VoteEquivalence::kResultTable;
  EvalConfig eval;  // comparison policy for result-table mode

  /// Throws std::invalid_argument when group_size is 0.
  void validate() const;
};

struct VoteCandidate {
  std::string sql;
  ExecOutcome exec;
};

struct VoteResult {
  std::size_t selected_index = 0;
  bool failed = false;  // no candidate executed; the first one is returned
  /// Clusters of executable candidates in order of first appearance; each
  /// lists member indices in ascending order.
  std::vector<std::vector<std::size_t>> clusters;
  std::optional<std::size_t> winning_cluster;
};

/// Union-find closure of the pairwise equivalence over executable
/// candidates; the largest cluster wins, ties go to the cluster that
/// appears first, and its earliest member is selected. Throws
/// std::invalid_argument for empty input.
VoteResult majority_vote(const std::vector<VoteCandidate>& candidates, const VoteConfig& cfg);

/// Pairwise equivalence used by majority_vote.
bool equivalent(const VoteCandidate& a, const VoteCandidate& b, const VoteConfig& cfg);

struct SweepSample {
  std::string question_id;
  std::vector<VoteCandidate> candidates;
  ResultTable golden;
};

struct SweepRow {
  std::size_t size = 0;
  std::size_t sample_count = 0;
  MetricMeans means;
};

struct SweepSkip {
  std::string question_id;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // one per requested size, in input order
  std::vector<SweepSkip> skipped;
};

/// For each size s, votes over each sample's first s candidates and
/// averages EX, EX_b and EX_f of the selection against the gold table. A
/// failed vote scores zero. Samples with fewer than max(sizes) candidates
/// are skipped for every size. Throws std::invalid_argument for an empty
/// or zero size list.
SweepResult sweep(const std::vector<SweepSample>& samples, const std::vector<std::size_t>& sizes,
                  const VoteConfig& cfg, std::size_t workers = 1);

/// "size,samples,EX,EX_b,EX_f" plus one line per row.
std::string sweep_csv(const SweepResult& result);
nlohmann::json sweep_json(const SweepResult& result);

}  // namespace sqlgrade
