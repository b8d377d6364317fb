#include "sqlgrade/reward.h"

#include "sqlgrade/parallel.h"

namespace sqlgrade {

std::string_view to_string(RewardBranch b) {
  switch (b) {
    case RewardBranch::kPartialMatch: return "partial-match";
    case RewardBranch::kExecutedIncorrect: return "executed-incorrect";
    case RewardBranch::kFailed: return "failed";
  }
  return "failed";
}

Reward reward(const ExecOutcome& exec, const ResultTable& golden, const EvalConfig& cfg) {
  if (!exec.ok() || !exec.table) return Reward{kFailedReward, RewardBranch::kFailed, 0.0};
  const auto& table = *exec.table;
  const double ex_f = evaluate(golden, table, cfg).ex_f;
  // An empty result never "returns results", whatever its column credit.
  if (table.row_count() > 0 && ex_f > 0.0) return Reward{kPartialMatchScale * ex_f, RewardBranch::kPartialMatch, ex_f};
  return Reward{kExecutedIncorrectReward, RewardBranch::kExecutedIncorrect, ex_f};
}

std::vector<Reward> reward_batch(const std::vector<std::string>& candidates, const std::string& db_id,
                                 const std::string& question_id, const DatabaseRef& db, const GoldenCache& cache,
                                 const Sandbox& sandbox, const EvalConfig& cfg, std::size_t workers) {
  const auto* entry = cache.find(db_id, question_id);
  if (!entry) throw CacheMissError("no golden cache entry for sample '" + question_id + "'");
  std::vector<Reward> out(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    out[i] = reward(sandbox.execute(db, candidates[i]), entry->table, cfg);
  });
  return out;
}

}  // namespace sqlgrade
