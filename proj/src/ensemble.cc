#include "sqlgrade/ensemble.h"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include "sqlgrade/parallel.h"
#include "sqlgrade/sql_text.h"

namespace sqlgrade {

std::string_view to_string(VoteEquivalence e) {
  return e == VoteEquivalence::kResultTable ? "result-table" : "normalized-sql";
}

VoteEquivalence parse_vote_equivalence(std::string_view s) {
  if (s == "result-table") return VoteEquivalence::kResultTable;
  if (s == "normalized-sql") return VoteEquivalence::kNormalizedSql;
  throw std::invalid_argument("unknown vote equivalence '" + std::string(s) + "'");
}

void VoteConfig::validate() const {
  if (group_size && *group_size == 0) throw std::invalid_argument("group_size must be >= 1");
  eval.validate();
}

bool equivalent(const VoteCandidate& a, const VoteCandidate& b, const VoteConfig& cfg) {
  if (!a.exec.ok() || !b.exec.ok()) return false;
  if (cfg.equivalence == VoteEquivalence::kNormalizedSql) return normalize_sql(a.sql) == normalize_sql(b.sql);
  const auto& ta = *a.exec.table;
  const auto& tb = *b.exec.table;
  if (ta.column_count() != tb.column_count() || ta.row_count() != tb.row_count()) return false;
  return evaluate(ta, tb, cfg.eval).ex_exact == 1 || evaluate(tb, ta, cfg.eval).ex_exact == 1;
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller index stays the root, so roots are first appearances.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

VoteResult majority_vote(const std::vector<VoteCandidate>& all, const VoteConfig& cfg) {
  cfg.validate();
  if (all.empty()) throw std::invalid_argument("majority_vote needs at least one candidate");
  const std::size_t n = std::min(all.size(), cfg.group_size.value_or(all.size()));

  std::vector<std::string> normalized;
  if (cfg.equivalence == VoteEquivalence::kNormalizedSql) {
    for (std::size_t i = 0; i < n; ++i) normalized.push_back(normalize_sql(all[i].sql));
  }
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!all[i].exec.ok()) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!all[j].exec.ok() || uf.find(i) == uf.find(j)) continue;
      const bool same = cfg.equivalence == VoteEquivalence::kNormalizedSql ? normalized[i] == normalized[j]
                                                                           : equivalent(all[i], all[j], cfg);
      if (same) uf.unite(i, j);
    }
  }

  VoteResult r;
  std::vector<std::optional<std::size_t>> cluster_of_root(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!all[i].exec.ok()) continue;
    const auto root = uf.find(i);
    if (!cluster_of_root[root]) {
      cluster_of_root[root] = r.clusters.size();
      r.clusters.emplace_back();
    }
    r.clusters[*cluster_of_root[root]].push_back(i);
  }
  if (r.clusters.empty()) {
    r.failed = true;
    r.selected_index = 0;
    return r;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < r.clusters.size(); ++c) {
    if (r.clusters[c].size() > r.clusters[best].size()) best = c;
  }
  r.winning_cluster = best;
  r.selected_index = r.clusters[best].front();
  return r;
}

SweepResult sweep(const std::vector<SweepSample>& samples, const std::vector<std::size_t>& sizes,
                  const VoteConfig& cfg, std::size_t workers) {
  if (sizes.empty()) throw std::invalid_argument("sweep needs at least one size");
  if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) {
    throw std::invalid_argument("sweep sizes must be >= 1");
  }
  const auto max_size = *std::max_element(sizes.begin(), sizes.end());

  SweepResult result;
  std::vector<const SweepSample*> usable;
  for (const auto& s : samples) {
    if (s.candidates.size() < max_size) {
      result.skipped.push_back({s.question_id, "has " + std::to_string(s.candidates.size()) +
                                                   " candidates, sweep needs " + std::to_string(max_size)});
    } else {
      usable.push_back(&s);
    }
  }

  // outcomes[size index][sample index]
  std::vector<std::vector<EvalOutcome>> outcomes(sizes.size(), std::vector<EvalOutcome>(usable.size()));
  parallel_for(usable.size(), workers, [&](std::size_t i) {
    const auto& s = *usable[i];
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      VoteConfig c = cfg;
      c.group_size = sizes[k];
      const auto vote = majority_vote(s.candidates, c);
      if (vote.failed) continue;  // zero credit
      outcomes[k][i] = evaluate(s.golden, *s.candidates[vote.selected_index].exec.table, cfg.eval);
    }
  });
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    SweepRow row;
    row.size = sizes[k];
    row.sample_count = usable.size();
    row.means = mean_metrics(outcomes[k]).value_or(MetricMeans{});
    result.rows.push_back(row);
  }
  return result;
}

namespace {

std::string number(double d) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string sweep_csv(const SweepResult& result) {
  std::string out = "size,samples,EX,EX_b,EX_f\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.size) + "," + std::to_string(r.sample_count) + "," + number(r.means.ex_exact) + "," +
           number(r.means.ex_b) + "," + number(r.means.ex_f) + "\n";
  }
  return out;
}

nlohmann::json sweep_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"size", r.size},
                    {"samples", r.sample_count},
                    {"EX", r.means.ex_exact},
                    {"EX_b", r.means.ex_b},
                    {"EX_f", r.means.ex_f}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : result.skipped) skipped.push_back({{"question_id", s.question_id}, {"reason", s.reason}});
  return {{"rows", std::move(rows)}, {"skipped", std::move(skipped)}};
}

}  // namespace sqlgrade
