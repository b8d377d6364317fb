#pragma once

// Execution-based reward: 10 * EX_f when the rollout executes and returns
// rows, 0.5 when it executes but earns no column credit, 0 when it fails.

#include <string>
#include <string_view>
#include <vector>

#include "sqlgrade/golden_cache.h"
#include "sqlgrade/metrics.h"
#include "sqlgrade/sandbox.h"

namespace sqlgrade {

enum class RewardBranch { kPartialMatch, kExecutedIncorrect, kFailed };

std::string_view to_string(RewardBranch b);

inline constexpr double kPartialMatchScale = 10.0;
inline constexpr double kExecutedIncorrectReward = 0.5;
inline constexpr double kFailedReward = 0.0;

struct Reward {
  double value = 0.0;
  RewardBranch branch = RewardBranch::kFailed;
  double ex_f = 0.0;
};

Reward reward(const ExecOutcome& exec, const ResultTable& golden, const EvalConfig& cfg);

class CacheMissError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Executes every candidate (up to `workers` at a time) and scores it
/// against the cached gold table. Output order is input order. Throws
/// CacheMissError when the sample has no cache entry.
std::vector<Reward> reward_batch(const std::vector<std::string>& candidates, const std::string& db_id,
                                 const std::string& question_id, const DatabaseRef& db, const GoldenCache& cache,
                                 const Sandbox& sandbox, const EvalConfig& cfg, std::size_t workers = 4);

}  // namespace sqlgrade
