#include "sqlgrade/verbal_rl.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <random>
#include <set>

#include "sqlgrade/prompts.h"
#include "sqlgrade/rng.h"
#include "sqlgrade/sql_text.h"
#include "sqlgrade/table_io.h"

namespace sqlgrade {

void VerbalConfig::validate() const {
  if (k_required < 1 || k_required > attempt_cap) throw std::invalid_argument("need 1 <= k_required <= attempt_cap");
  if (judge_repeats < 1) throw std::invalid_argument("judge_repeats must be >= 1");
  if (judge_parse_retries < 0) throw std::invalid_argument("judge_parse_retries must be >= 0");
  if (max_transport_failures < 1) throw std::invalid_argument("max_transport_failures must be >= 1");
}

std::string_view to_string(AttemptOutcome o) {
  switch (o) {
    case AttemptOutcome::kRetained:
      return "retained";
    case AttemptOutcome::kDuplicate:
      return "duplicate";
    case AttemptOutcome::kNoSqlBlock:
      return "no-sql-block";
    case AttemptOutcome::kNotExecutable:
      return "not-executable";
    case AttemptOutcome::kGenerationError:
      return "generation-error";
  }
  return "generation-error";
}

CandidateGroup sample_candidates(TextGenerator& client, const std::string& prompt, const DatabaseRef& db,
                                 const Sandbox& sandbox, const VerbalConfig& cfg) {
  cfg.validate();
  CandidateGroup group;
  std::set<std::string> seen;
  int counted = 0;
  int transport_failures = 0;
  const auto k = static_cast<std::size_t>(cfg.k_required);
  for (int seq = 0; counted < cfg.attempt_cap && group.candidates.size() < k; ++seq) {
    GenRequest req = cfg.generation;
    req.prompt = prompt;
    if (req.seed) req.seed = *req.seed + static_cast<std::uint64_t>(seq);
    const auto res = generate_with_retry(client, req, cfg.retry);

    AttemptRecord rec;
    rec.index = seq;
    if (!res.ok()) {
      rec.outcome = AttemptOutcome::kGenerationError;
      rec.detail = res.error->message;
      if (!cfg.transport_errors_consume_attempts) {
        rec.counted = false;
        group.attempts.push_back(std::move(rec));
        if (++transport_failures >= cfg.max_transport_failures) break;
        continue;
      }
    } else if (auto sql = extract_sql(*res.text); !sql) {
      rec.outcome = AttemptOutcome::kNoSqlBlock;
    } else {
      rec.sql = *sql;
      auto normalized = normalize_sql(*sql);
      if (seen.count(normalized)) {
        rec.outcome = AttemptOutcome::kDuplicate;
      } else {
        auto exec = sandbox.execute(db, *sql);
        if (exec.ok()) {
          rec.outcome = AttemptOutcome::kRetained;
          seen.insert(normalized);
          Candidate c;
          c.sql = std::move(*sql);
          c.normalized_sql = std::move(normalized);
          c.exec = std::move(exec);
          c.attempt_index = seq;
          group.candidates.push_back(std::move(c));
        } else {
          rec.outcome = AttemptOutcome::kNotExecutable;
          rec.detail = std::string(to_string(exec.status)) + ": " + exec.error_text.value_or("");
        }
      }
    }
    ++counted;
    group.attempts.push_back(std::move(rec));
  }
  group.attempts_used = counted;
  return group;
}

std::vector<double> parse_scores(const std::string& judge_output, std::size_t expected_n, bool clamp) {
  if (expected_n < 1) throw std::invalid_argument("expected_n must be >= 1");
  const std::string text = strip_think_blocks(judge_output);
  constexpr std::string_view kOpen = "<scores>";
  constexpr std::string_view kClose = "</scores>";
  const auto open = text.rfind(kOpen);
  if (open == std::string::npos) throw ScoreParseError("no <scores> block");
  const auto body_start = open + kOpen.size();
  const auto close = text.find(kClose, body_start);
  if (close == std::string::npos) throw ScoreParseError("unterminated <scores> block");

  std::vector<double> out;
  std::size_t pos = body_start;
  while (pos < close) {
    const char c = text[pos];
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < close && text[end] != ',' && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string token = text.substr(pos, end - pos);
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
      throw ScoreParseError("not a number: '" + token + "'");
    }
    out.push_back(clamp ? std::clamp(v, 0.0, 1.0) : v);
    pos = end;
  }
  if (out.size() != expected_n) {
    throw ScoreParseError("expected " + std::to_string(expected_n) + " scores, found " + std::to_string(out.size()));
  }
  return out;
}

std::vector<double> z_scores(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / n);
  std::vector<double> out(values.size(), 0.0);
  if (sd > 0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  }
  return out;
}

namespace {

void finalize_scores(CandidateGroup& group, const VerbalConfig& cfg) {
  std::vector<double> means;
  for (auto& c : group.candidates) {
    double sum = 0.0;
    for (double s : c.scores) sum += s;
    c.mean_score = c.scores.empty() ? 0.0 : sum / static_cast<double>(c.scores.size());
    means.push_back(c.mean_score);
  }
  const auto selection = cfg.z_normalize ? z_scores(means) : means;
  for (std::size_t i = 0; i < group.candidates.size(); ++i) group.candidates[i].selection_score = selection[i];
}

}  // namespace

CandidateGroup judge(TextGenerator& client, const std::string& score_prompt, CandidateGroup group,
                     const VerbalConfig& cfg) {
  cfg.validate();
  if (group.candidates.empty()) throw std::invalid_argument("judge needs a non-empty group");
  const std::size_t n = group.candidates.size();
  const int tries_per_repeat = 1 + cfg.judge_parse_retries;
  std::vector<JudgeCall> calls;
  bool any = false;
  for (int r = 0; r < cfg.judge_repeats; ++r) {
    JudgeCall call;
    call.repeat = r;
    for (int t = 0; t < tries_per_repeat && !call.scores; ++t) {
      ++call.tries;
      GenRequest req = cfg.judging;
      req.prompt = score_prompt;
      if (req.seed) req.seed = *req.seed + static_cast<std::uint64_t>(r * tries_per_repeat + t);
      const auto res = generate_with_retry(client, req, cfg.retry);
      if (!res.ok()) {
        call.last_error = res.error->message;
        continue;
      }
      try {
        call.scores = parse_scores(*res.text, n, cfg.clamp);
      } catch (const ScoreParseError& e) {
        call.last_error = e.what();
      }
    }
    if (call.scores) {
      any = true;
      for (std::size_t i = 0; i < n; ++i) group.candidates[i].scores.push_back((*call.scores)[i]);
    }
    calls.push_back(std::move(call));
  }
  if (!any) throw JudgeError("all " + std::to_string(cfg.judge_repeats) + " judge calls failed", std::move(calls));
  group.judge_calls = std::move(calls);
  finalize_scores(group, cfg);
  return group;
}

const std::string& select(CandidateGroup& group, const VerbalConfig& cfg) {
  if (group.candidates.empty()) throw std::invalid_argument("select from an empty group");
  double best = group.candidates.front().selection_score;
  for (const auto& c : group.candidates) best = std::max(best, c.selection_score);
  SelectionDraw draw;
  draw.seed = cfg.tie_break_seed;
  for (std::size_t i = 0; i < group.candidates.size(); ++i) {
    if (group.candidates[i].selection_score == best) draw.tied.push_back(i);
  }
  if (draw.tied.size() == 1) {
    draw.chosen = draw.tied.front();
  } else {
    std::mt19937_64 gen(cfg.tie_break_seed);
    draw.chosen = draw.tied[uniform_index(gen, draw.tied.size())];
  }
  group.selected_index = draw.chosen;
  group.draw = std::move(draw);
  return group.candidates[*group.selected_index].sql;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PipelineResult run_pipeline(const PipelineInputs& in, TextGenerator& client, const Sandbox& sandbox,
                            const VerbalConfig& cfg) {
  if (!in.sample || !in.db) throw std::invalid_argument("run_pipeline needs a sample and a database");
  PipelineResult result;
  PromptFields fields;
  fields.dialect = dialect_display_name(in.db->dialect);
  fields.schema = in.schema_text;
  fields.context = in.sample->context.value_or("");
  fields.question = in.sample->question;

  result.group = sample_candidates(client, generation_prompt(fields), *in.db, sandbox, cfg);
  if (result.group.candidates.empty()) {
    result.failure = "no executable candidate after " + std::to_string(result.group.attempts_used) + " attempts";
    return result;
  }

  std::vector<std::string> sqls;
  for (const auto& c : result.group.candidates) sqls.push_back(c.sql);
  try {
    result.group = judge(client, scoring_prompt(fields, sqls), result.group, cfg);
  } catch (const JudgeError& e) {
    result.group.judge_calls = e.calls;
    result.group.judge_failed = true;
    for (auto& c : result.group.candidates) {
      c.scores.clear();
      c.mean_score = 0.0;
      c.selection_score = 0.0;
    }
  }

  VerbalConfig draw_cfg = cfg;
  draw_cfg.tie_break_seed = derive_seed(cfg.tie_break_seed, in.sample->question_id);
  result.final_sql = select(result.group, draw_cfg);
  const auto& chosen = result.group.candidates[*result.group.selected_index];
  result.final_exec = chosen.exec;
  if (in.golden && chosen.exec.table) result.eval = evaluate(*in.golden, *chosen.exec.table, in.eval);
  return result;
}

nlohmann::json trace_to_json(const PipelineResult& result, const std::string& question_id) {
  using nlohmann::json;
  const auto& g = result.group;
  json attempts = json::array();
  for (const auto& a : g.attempts) {
    attempts.push_back({{"index", a.index},
                        {"counted", a.counted},
                        {"outcome", std::string(to_string(a.outcome))},
                        {"sql", a.sql ? json(*a.sql) : json()},
                        {"detail", a.detail}});
  }
  json candidates = json::array();
  for (const auto& c : g.candidates) {
    candidates.push_back({{"sql", c.sql},
                          {"normalized_sql", c.normalized_sql},
                          {"attempt_index", c.attempt_index},
                          {"status", std::string(to_string(c.exec.status))},
                          {"row_count", c.exec.table ? c.exec.table->row_count() : 0},
                          {"truncated", c.exec.truncated},
                          {"scores", c.scores},
                          {"mean_score", c.mean_score},
                          {"selection_score", c.selection_score}});
  }
  json calls = json::array();
  for (const auto& c : g.judge_calls) {
    calls.push_back({{"repeat", c.repeat},
                     {"tries", c.tries},
                     {"scores", c.scores ? json(*c.scores) : json()},
                     {"error", c.last_error}});
  }
  json doc = {{"question_id", question_id},
              {"attempts_used", g.attempts_used},
              {"attempts", std::move(attempts)},
              {"candidates", std::move(candidates)},
              {"judge_calls", std::move(calls)},
              {"judge_failed", g.judge_failed}};
  doc["selection"] = g.draw ? json{{"tied", g.draw->tied}, {"chosen", g.draw->chosen}, {"seed", g.draw->seed}} : json();
  doc["final_sql"] = result.final_sql ? json(*result.final_sql) : json();
  doc["failure"] = result.failure ? json(*result.failure) : json();
  doc["eval"] = result.eval ? outcome_to_json(*result.eval) : json();
  return doc;
}

}  // namespace sqlgrade
