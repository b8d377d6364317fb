#pragma once

// Column-level execution accuracy: exact-match EX (approximation of the
// benchmark scripts), binary EX_b with the extra-column bound tau, and
// fractional EX_f.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "sqlgrade/tabular.h"

namespace sqlgrade {

enum class MatchingMode { kGreedy, kMaximumBipartite };

struct EvalConfig {
  int tau = 5;
  NormalizationPolicy policy;
  MatchingMode matching_mode = MatchingMode::kMaximumBipartite;

  /// Throws std::invalid_argument when tau < 1 or the policy is invalid.
  void validate() const;
};

struct ColumnMatching {
  /// (golden column, candidate column), sorted by golden index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> unmatched_golden;
  std::size_t extra_candidate_count = 0;
};

struct EvalOutcome {
  int ex_exact = 0;
  int ex_b = 0;
  double ex_f = 0.0;
  ColumnMatching matching;
};

/// Golden column g is matchable to candidate column c iff their normalized
/// value multisets are equal.
ColumnMatching match_columns(const ResultTable& golden, const ResultTable& candidate, const EvalConfig& cfg);

EvalOutcome evaluate(const ResultTable& golden, const ResultTable& candidate, const EvalConfig& cfg);

struct MetricMeans {
  double ex_exact = 0.0;
  double ex_b = 0.0;
  double ex_f = 0.0;
};

struct BatchOutcome {
  std::vector<EvalOutcome> outcomes;
  std::optional<MetricMeans> means;  // absent for an empty batch
};

/// Arithmetic means accumulated in input order; nullopt for an empty list.
std::optional<MetricMeans> mean_metrics(const std::vector<EvalOutcome>& outcomes);

BatchOutcome evaluate_batch(const std::vector<std::pair<ResultTable, ResultTable>>& items, const EvalConfig& cfg);

/// Maximum-cardinality matching on a bipartite graph given as adjacency
/// lists from left vertices to right vertices (Hopcroft-Karp). Entry i of
/// the result is the right vertex matched to left vertex i, if any.
std::vector<std::optional<std::size_t>> maximum_bipartite_matching(
    const std::vector<std::vector<std::size_t>>& adjacency, std::size_t right_count);

}  // namespace sqlgrade
