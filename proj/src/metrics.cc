#include "sqlgrade/metrics.h"

#include <limits>
#include <queue>
#include <stdexcept>

namespace sqlgrade {

void EvalConfig::validate() const {
  if (tau < 1) throw std::invalid_argument("tau must be at least 1");
  policy.validate();
}

std::vector<std::optional<std::size_t>> maximum_bipartite_matching(
    const std::vector<std::vector<std::size_t>>& adjacency, std::size_t right_count) {
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();
  const std::size_t left_count = adjacency.size();
  std::vector<std::size_t> match_left(left_count, kFree);
  std::vector<std::size_t> match_right(right_count, kFree);
  std::vector<std::size_t> dist(left_count);

  // Layers free left vertices at distance 0; returns whether some free right
  // vertex is reachable along alternating paths.
  auto bfs = [&]() {
    std::queue<std::size_t> q;
    for (std::size_t u = 0; u < left_count; ++u) {
      if (match_left[u] == kFree) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = kInf;
      }
    }
    bool found = false;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adjacency[u]) {
        const std::size_t w = match_right[v];
        if (w == kFree) {
          found = true;
        } else if (dist[w] == kInf) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };

  // Recursion depth is bounded by the number of left vertices (columns).
  auto dfs = [&](auto&& self, std::size_t u) -> bool {
    for (std::size_t v : adjacency[u]) {
      const std::size_t w = match_right[v];
      if (w == kFree || (dist[w] == dist[u] + 1 && self(self, w))) {
        match_left[u] = v;
        match_right[v] = u;
        return true;
      }
    }
    dist[u] = kInf;
    return false;
  };

  while (bfs()) {
    for (std::size_t u = 0; u < left_count; ++u) {
      if (match_left[u] == kFree) dfs(dfs, u);
    }
  }

  std::vector<std::optional<std::size_t>> out(left_count);
  for (std::size_t u = 0; u < left_count; ++u) {
    if (match_left[u] != kFree) out[u] = match_left[u];
  }
  return out;
}

ColumnMatching match_columns(const ResultTable& golden, const ResultTable& candidate, const EvalConfig& cfg) {
  const std::size_t gn = golden.column_count();
  const std::size_t cn = candidate.column_count();

  std::vector<ColumnMultiset> gsets, csets;
  gsets.reserve(gn);
  csets.reserve(cn);
  for (std::size_t i = 0; i < gn; ++i) gsets.push_back(column_multiset(golden, i, cfg.policy));
  for (std::size_t j = 0; j < cn; ++j) csets.push_back(column_multiset(candidate, j, cfg.policy));

  std::vector<std::vector<std::size_t>> adjacency(gn);
  if (golden.row_count() == candidate.row_count()) {
    for (std::size_t i = 0; i < gn; ++i) {
      for (std::size_t j = 0; j < cn; ++j) {
        if (gsets[i] == csets[j]) adjacency[i].push_back(j);
      }
    }
  }

  std::vector<std::optional<std::size_t>> assigned(gn);
  if (cfg.matching_mode == MatchingMode::kGreedy) {
    std::vector<bool> used(cn, false);
    for (std::size_t i = 0; i < gn; ++i) {
      for (std::size_t j : adjacency[i]) {
        if (!used[j]) {
          used[j] = true;
          assigned[i] = j;
          break;
        }
      }
    }
  } else {
    assigned = maximum_bipartite_matching(adjacency, cn);
  }

  ColumnMatching m;
  for (std::size_t i = 0; i < gn; ++i) {
    if (assigned[i]) {
      m.pairs.emplace_back(i, *assigned[i]);
    } else {
      m.unmatched_golden.push_back(i);
    }
  }
  m.extra_candidate_count = cn - m.pairs.size();
  return m;
}

EvalOutcome evaluate(const ResultTable& golden, const ResultTable& candidate, const EvalConfig& cfg) {
  EvalOutcome out;
  out.matching = match_columns(golden, candidate, cfg);
  const std::size_t gn = golden.column_count();
  out.ex_f = gn == 0 ? 1.0 : static_cast<double>(out.matching.pairs.size()) / static_cast<double>(gn);
  const bool all_matched = out.matching.unmatched_golden.empty();
  const auto extra = out.matching.extra_candidate_count;
  out.ex_b = all_matched && extra < static_cast<std::size_t>(cfg.tau) ? 1 : 0;
  out.ex_exact = all_matched && extra == 0 && candidate.column_count() == gn ? 1 : 0;
  return out;
}

std::optional<MetricMeans> mean_metrics(const std::vector<EvalOutcome>& outcomes) {
  if (outcomes.empty()) return std::nullopt;
  MetricMeans m;
  for (const auto& o : outcomes) {
    m.ex_exact += o.ex_exact;
    m.ex_b += o.ex_b;
    m.ex_f += o.ex_f;
  }
  const auto n = static_cast<double>(outcomes.size());
  m.ex_exact /= n;
  m.ex_b /= n;
  m.ex_f /= n;
  return m;
}

BatchOutcome evaluate_batch(const std::vector<std::pair<ResultTable, ResultTable>>& items, const EvalConfig& cfg) {
  BatchOutcome b;
  b.outcomes.reserve(items.size());
  for (const auto& [golden, candidate] : items) b.outcomes.push_back(evaluate(golden, candidate, cfg));
  b.means = mean_metrics(b.outcomes);
  return b;
}

}  // namespace sqlgrade
