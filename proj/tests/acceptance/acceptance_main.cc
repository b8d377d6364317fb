// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here, not configurable.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.h"
#include "oracles.h"
#include "sqlgrade/ensemble.h"
#include "sqlgrade/golden_cache.h"
#include "sqlgrade/grpo.h"
#include "sqlgrade/metrics.h"
#include "sqlgrade/report.h"
#include "sqlgrade/reward.h"
#include "sqlgrade/schedule.h"
#include "sqlgrade/schema_profile.h"
#include "sqlgrade/verbal_rl.h"

namespace sqlgrade::testing {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

// Collects the first few failed checks of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += "\n      " + f;
    if (count_ > failures_.size()) s += "\n      (" + std::to_string(count_ - failures_.size()) + " more)";
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

ExecOutcome ok_exec(ResultTable t) {
  ExecOutcome o;
  o.status = ExecStatus::kOk;
  o.table = std::move(t);
  return o;
}

// 1. EX_f equals the brute-force optimum over injective matchings.
std::string metric_oracle(Checks& c) {
  std::mt19937_64 rng(20260101);
  const EvalConfig cfg;
  const auto start = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_table(rng, 6, 8);
    const auto cand = random_candidate_for(g, rng, 6);
    const double got = evaluate(g, cand, cfg).ex_f;
    const double want = oracle_ex_f(g, cand, cfg.policy);
    c.expect(got == want, "pair " + std::to_string(i) + ": EX_f " + fmt(got) + " vs oracle " + fmt(want));
  }
  const double secs = seconds_since(start);
  c.expect(secs < 10.0, "runtime " + fmt(secs) + " s");
  return "1000 pairs in " + std::to_string(secs).substr(0, 5) + " s";
}

// 2. Extra-column bound is strict.
std::string tau_boundary(Checks& c) {
  auto with_extras = [](int extra) {
    std::vector<std::vector<CellValue>> cols{{I(1), I(2)}, {T("x"), T("y")}, {R(0.5), R(1.5)}};
    std::vector<std::string> names{"a", "b", "c"};
    for (int i = 0; i < extra; ++i) {
      cols.push_back({T("ctx" + std::to_string(i)), T("ctx")});
      names.push_back("extra" + std::to_string(i));
    }
    return ResultTable(names, cols);
  };
  const auto golden = with_extras(0);
  EvalConfig cfg;
  cfg.tau = 5;
  const int four = evaluate(golden, with_extras(4), cfg).ex_b;
  const int five = evaluate(golden, with_extras(5), cfg).ex_b;
  c.expect(four == 1, "4 extra columns: EX_b " + std::to_string(four));
  c.expect(five == 0, "5 extra columns: EX_b " + std::to_string(five));
  return "EX_b " + std::to_string(four) + " / " + std::to_string(five);
}

// 3. Reward branches and the half-match fixture.
std::string reward_table(Checks& c) {
  const auto golden = ResultTable::from_rows({"a", "b"}, {{I(1), T("x")}, {I(2), T("y")}});
  const EvalConfig cfg;
  const auto partial = ResultTable::from_rows({"b"}, {{T("y")}, {T("x")}});
  const auto r1 = reward(ok_exec(partial), golden, cfg);
  c.expect(r1.value == 10.0 * oracle_ex_f(golden, partial, cfg.policy), "partial branch " + fmt(r1.value));
  const auto r2 = reward(ok_exec(ResultTable::from_rows({"z"}, {{I(9)}, {I(8)}})), golden, cfg);
  c.expect(r2.value == 0.5, "executed-incorrect branch " + fmt(r2.value));
  ExecOutcome failed;
  failed.status = ExecStatus::kError;
  c.expect(reward(failed, golden, cfg).value == 0.0, "failed branch");

  TempDir dir;
  create_half_match_db(dir / "db.sqlite");
  DatabaseRef db;
  db.locator = (dir / "db.sqlite").string();
  const Sandbox sandbox;
  const auto built = build_golden_cache({Sample{"q", "?", std::nullopt, "d", "sqlite", "SELECT a, b FROM t"}},
                                        {{"d", db}}, sandbox);
  const std::vector<std::string> cands{"SELECT a, b FROM t", "SELECT a b c FROM", "SELECT a FROM t"};
  const auto rewards = reward_batch(cands, "d", "q", db, built.cache, sandbox, cfg);
  std::string got;
  for (const auto& r : rewards) got += (got.empty() ? "" : ", ") + fmt(r.value);
  c.expect(rewards.size() == 3 && rewards[0].value == 10.0 && rewards[1].value == 0.0 && rewards[2].value == 5.0,
           "half-match fixture [" + got + "]");
  // each value agrees with the metric oracle on the executed table
  for (std::size_t i = 0; i < cands.size() && i < rewards.size(); ++i) {
    const auto out = sandbox.execute(db, cands[i]);
    if (!out.ok()) continue;
    const double f = oracle_ex_f(built.cache.find("d", "q")->table, *out.table, cfg.policy);
    c.expect(rewards[i].value == 10.0 * f, "candidate " + std::to_string(i) + " vs oracle");
  }
  return "[" + got + "]";
}

// 4. Attempt accounting and trace reproducibility.
std::string verbal_loop(Checks& c) {
  TempDir dir;
  create_half_match_db(dir / "db.sqlite");
  DatabaseRef db;
  db.locator = (dir / "db.sqlite").string();
  const Sandbox sandbox;
  VerbalConfig cfg;
  cfg.retry.initial_backoff = std::chrono::milliseconds(0);

  ScriptedGenerator valid([](const GenRequest&, std::size_t i) {
    return GenResult::success(sql_reply("SELECT a FROM t WHERE a > " + std::to_string(i)));
  });
  const auto g1 = sample_candidates(valid, "p", db, sandbox, cfg);
  c.expect(g1.attempts_used == 10 && g1.candidates.size() == 10,
           "all-valid: " + std::to_string(g1.attempts_used) + " attempts");

  ScriptedGenerator invalid([](const GenRequest&, std::size_t) { return GenResult::success(sql_reply("SELEC x")); });
  const auto g2 = sample_candidates(invalid, "p", db, sandbox, cfg);
  c.expect(g2.attempts_used == 200 && g2.candidates.empty(),
           "all-invalid: " + std::to_string(g2.attempts_used) + " attempts");

  ScriptedGenerator constant([](const GenRequest&, std::size_t) { return GenResult::success(sql_reply("SELECT a FROM t")); });
  const auto g3 = sample_candidates(constant, "p", db, sandbox, cfg);
  c.expect(g3.candidates.size() == 1 && g3.attempts_used == 200,
           "constant: " + std::to_string(g3.candidates.size()) + " retained");

  const Sample sample{"q1", "rows?", std::nullopt, "d", "sqlite", "SELECT a, b FROM t"};
  const auto golden = *sandbox.execute(db, sample.gold_sql).table;
  const PipelineInputs in{&sample, &db, "CREATE TABLE t (a INT, b TEXT);", &golden, EvalConfig{}};
  cfg.tie_break_seed = 12345;
  auto trace = [&] {
    ScriptedGenerator gen([](const GenRequest& r, std::size_t i) {
      if (r.prompt.find("scoring machine") != std::string::npos) {
        return GenResult::success(scores_reply(std::vector<double>(10, 0.5)));  // ten-way tie
      }
      return GenResult::success(sql_reply("SELECT a, b FROM t WHERE " + std::to_string(i % 12) + " >= 0"));
    });
    return trace_to_json(run_pipeline(in, gen, sandbox, cfg), sample.question_id).dump();
  };
  const auto t1 = trace(), t2 = trace();
  c.expect(t1 == t2, "traces differ under a fixed seed");
  return "10 / 200 / 1 attempts-retained, trace " + std::to_string(t1.size()) + " bytes";
}

// 5. Judge means, clamping and z-normalization.
std::string judge_mechanics(Checks& c) {
  CandidateGroup g;
  for (int i = 0; i < 3; ++i) {
    Candidate cand;
    cand.sql = "SELECT " + std::to_string(i);
    g.candidates.push_back(cand);
  }
  // call r scores (r/20, 1.5, -0.5): the last two clamp to 1 and 0
  ScriptedGenerator gen([](const GenRequest&, std::size_t r) {
    return GenResult::success(scores_reply({static_cast<double>(r) / 20.0, 1.5, -0.5}));
  });
  const VerbalConfig cfg;
  const auto judged = judge(gen, "s", g, cfg);
  double want0 = 0;
  for (int r = 0; r < 20; ++r) want0 += r / 20.0;
  want0 /= 20;
  c.expect(gen.calls() == 20, "judge calls " + std::to_string(gen.calls()));
  c.expect(judged.candidates[0].scores.size() == 20, "20 scores per candidate");
  c.expect(judged.candidates[0].mean_score == want0, "mean " + fmt(judged.candidates[0].mean_score) + " vs " + fmt(want0));
  c.expect(judged.candidates[1].mean_score == 1.0, "clamped high mean " + fmt(judged.candidates[1].mean_score));
  c.expect(judged.candidates[2].mean_score == 0.0, "clamped low mean " + fmt(judged.candidates[2].mean_score));

  ScriptedGenerator pair([](const GenRequest&, std::size_t) { return GenResult::success(scores_reply({0.6, 0.4})); });
  VerbalConfig z = cfg;
  z.z_normalize = true;
  CandidateGroup two;
  two.candidates.resize(2);
  auto zg = judge(pair, "s", two, z);
  c.expect(std::fabs(zg.candidates[0].selection_score - 1.0) < 1e-12 &&
               std::fabs(zg.candidates[1].selection_score + 1.0) < 1e-12,
           "z-normalized means " + fmt(zg.candidates[0].selection_score) + ", " +
               fmt(zg.candidates[1].selection_score));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    CandidateGroup a;
    std::vector<double> means;
    for (std::size_t i = 0; i < 2 + rng() % 10; ++i) {
      Candidate cand;
      cand.selection_score = u(rng);
      means.push_back(cand.selection_score);
      a.candidates.push_back(cand);
    }
    auto b = a;
    const auto zs = z_scores(means);
    for (std::size_t i = 0; i < zs.size(); ++i) b.candidates[i].selection_score = zs[i];
    select(a, cfg);
    select(b, cfg);
    c.expect(a.selected_index == b.selected_index, "argmax changed under z-normalization, trial " + std::to_string(trial));
  }
  return "mean " + fmt(judged.candidates[0].mean_score) + ", clamp 1/0, z +1/-1";
}

// 6. Learning-rate schedule.
std::string schedule_check(Checks& c) {
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)); };
  const ScheduleSpec s;
  const double floor = s.floor();
  c.expect(rel(lr_at(15, s), 1e-7) <= 1e-12, "step 15: " + fmt(lr_at(15, s)));
  c.expect(rel(lr_at(100, s), 1e-5) <= 1e-12, "step 100: " + fmt(lr_at(100, s)));
  const double mid = floor + (1e-5 - floor) * (1 + std::cos(std::numbers::pi * (550.0 - 100.0) / 900.0)) / 2;
  c.expect(rel(lr_at(550, s), mid) <= 1e-12, "step 550: " + fmt(lr_at(550, s)) + " vs " + fmt(mid));
  for (std::int64_t total : {100, 777, 1000, 4096}) {
    ScheduleSpec t;
    t.total_steps = total;
    for (double b : {t.warmup_frac * static_cast<double>(total), t.ramp_end_frac * static_cast<double>(total)}) {
      const double left = lr_at_position(std::nextafter(b, 0.0), t), right = lr_at_position(b, t);
      c.expect(rel(left, right) <= 1e-12, "discontinuity at " + fmt(b) + " (S=" + std::to_string(total) + ")");
    }
  }
  return "1e-7 / 1e-5 / cosine midpoint";
}

// 7. GRPO arithmetic.
std::string grpo_check(Checks& c) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rew(0, 10), lp(-10, 0);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t g = 1 + rng() % 128;
    std::vector<double> r(g);
    for (auto& x : r) x = rew(rng);
    long double sum = 0;
    for (double a : advantages(r)) sum += a;
    c.expect(std::fabs(static_cast<double>(sum)) <= static_cast<double>(g) * 1e-12, "advantage sum " + fmt(static_cast<double>(sum)));
  }
  const GrpoConfig cfg;
  c.expect(grpo_objective({1.0}, {1.5}, 0.0, cfg) == 1.2, "clip at 1+eps");
  c.expect(grpo_objective({1.0}, {0.5}, 0.0, cfg) == 0.5, "min picks unclipped below 1-eps");
  c.expect(grpo_objective({-1.0}, {0.5}, 0.0, cfg) == -0.8, "clip at 1-eps for negative advantage");
  c.expect(grpo_objective(GrpoBatch{{3.0}, {1.0}, 0.0}, cfg) == 0.0, "single rollout");
  c.expect(kl_penalty({-1.0, -2.0, -3.0}, {-1.0, -2.0, -3.0}) == 0.0, "kl of identical sequences");
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<double> p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = lp(rng);
      q[i] = lp(rng);
    }
    c.expect(kl_penalty(p, q) >= 0.0, "negative kl at pair " + std::to_string(t));
  }
  return "sums, clip fixtures, 10000 kl pairs";
}

// 8. Schema string and subsetting.
std::string schema_check(Checks& c) {
  TempDir dir;
  create_school_budget(dir / "db.sqlite");
  DatabaseRef db;
  db.locator = (dir / "db.sqlite").string();
  const auto full = profile(db);
  c.expect(full.rendered == read_text(data_dir() / "school_budget_schema.txt"), "rendered schema differs from reference");

  std::vector<std::string> all_columns;
  for (const auto& t : full.tables) {
    for (const auto& col : t.columns) all_columns.push_back(col.name);
  }
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    SubsetPolicy pol;
    pol.budget = 100 + rng() % (full.rendered.size());
    pol.extra_sample_count = rng() % 6;
    pol.rng_seed = rng();
    std::string gold = "SELECT " + all_columns[rng() % all_columns.size()] + " FROM School";
    const auto s = subset(full, gold, pol);
    for (const auto& t : full.tables) {
      std::set<std::string> keys(t.primary_key.begin(), t.primary_key.end());
      for (const auto& fk : t.foreign_keys) keys.insert(fk.columns.begin(), fk.columns.end());
      const TableProfile* kept = nullptr;
      for (const auto& st : s.tables) {
        if (st.name == t.name) kept = &st;
      }
      for (const auto& k : keys) {
        bool present = false;
        if (kept) {
          for (const auto& col : kept->columns) present |= col.name == k;
        }
        c.expect(present, "trial " + std::to_string(trial) + " dropped " + t.name + "." + k);
      }
    }
  }
  return "byte-exact reference, 1000 subset trials";
}

// 9. Majority vote.
std::string vote_check(Checks& c) {
  std::mt19937_64 rng(9);
  std::vector<SweepSample> samples;
  MetricMeans greedy;
  for (int i = 0; i < 200; ++i) {
    SweepSample s;
    s.question_id = std::to_string(i);
    s.golden = random_table(rng, 3, 4);
    for (int k = 0; k < 4; ++k) {
      VoteCandidate v;
      v.sql = "c";
      if (rng() % 5 == 0) {
        v.exec.status = ExecStatus::kError;
      } else {
        v.exec = ok_exec(random_candidate_for(s.golden, rng, 4));
      }
      s.candidates.push_back(v);
    }
    if (s.candidates[0].exec.ok()) {
      const auto o = evaluate(s.golden, *s.candidates[0].exec.table, EvalConfig{});
      greedy.ex_exact += o.ex_exact;
      greedy.ex_b += o.ex_b;
      greedy.ex_f += o.ex_f;
    }
    samples.push_back(std::move(s));
  }
  const auto r = sweep(samples, {1}, VoteConfig{});
  c.expect(r.rows[0].means.ex_exact == greedy.ex_exact / 200 && r.rows[0].means.ex_b == greedy.ex_b / 200 &&
               std::fabs(r.rows[0].means.ex_f - greedy.ex_f / 200) <= 1e-15,
           "size-1 sweep differs from greedy");

  // Tolerance fixtures: values on both sides of grid cells, int/real twins.
  VoteConfig cfg;
  cfg.eval.policy.real_tolerance = {1e-3, 1e-3};
  const double vals[] = {1.0, 1.0004, 1.0009, 1.0011, 1.0016, 0.9996, 2.0};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<VoteCandidate> cands;
    for (std::size_t i = 0; i < 2 + rng() % 24; ++i) {
      const auto pick = rng() % 9;
      if (pick == 8) {
        VoteCandidate v;
        v.exec.status = ExecStatus::kError;
        cands.push_back(v);
      } else if (pick == 7) {
        cands.push_back({"i", ok_exec(ResultTable::from_rows({"v"}, {{I(1)}}))});
      } else {
        cands.push_back({"r", ok_exec(ResultTable::from_rows({"v"}, {{R(vals[pick])}}))});
      }
    }
    const auto v = majority_vote(cands, cfg);
    std::vector<int> owner(cands.size(), -1);
    for (std::size_t k = 0; k < v.clusters.size(); ++k) {
      for (auto m : v.clusters[k]) {
        c.expect(owner[m] == -1, "candidate in two clusters");
        owner[m] = static_cast<int>(k);
      }
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
      c.expect((owner[i] == -1) == !cands[i].exec.ok(), "cluster membership vs executability");
      for (std::size_t j = 0; j < cands.size(); ++j) {
        if (owner[i] >= 0 && owner[j] >= 0 && equivalent(cands[i], cands[j], cfg)) {
          c.expect(owner[i] == owner[j], "equivalent pair split across clusters");
        }
      }
    }
    // every cluster is connected under the pairwise relation
    for (const auto& cl : v.clusters) {
      std::set<std::size_t> reached{cl.front()};
      for (bool grew = true; grew;) {
        grew = false;
        for (auto a : cl) {
          if (reached.count(a)) continue;
          for (auto b : reached) {
            if (equivalent(cands[a], cands[b], cfg)) {
              reached.insert(a);
              grew = true;
              break;
            }
          }
        }
      }
      c.expect(reached.size() == cl.size(), "cluster is not connected");
    }
  }
  return "size-1 == greedy on 200 samples, 500 partition trials";
}

// 10. CLI smoke run over 20 samples.
std::string cli_smoke(Checks& c) {
  TempDir dir;
  create_school_budget(dir / "db.sqlite");
  const std::vector<std::string> golds{"SELECT Mascot FROM School", "SELECT count(*) FROM endowment",
                                       "SELECT School_id, Year FROM budget", "SELECT amount FROM endowment",
                                       "SELECT School_name, Enrollment FROM School"};
  const std::vector<std::string> preds{"SELECT Mascot FROM School", "SELECT 11", "SELECT Year FROM budget",
                                       "SELECT amount, donator_name FROM endowment", "SELECT nope FROM School"};
  std::vector<Sample> samples;
  json predictions = json::object();
  for (int i = 0; i < 20; ++i) {
    const std::string id = "s" + std::to_string(i);
    samples.push_back(Sample{id, "question " + id, std::nullopt, "school_budget", "sqlite", golds[i % 5]});
    predictions[id] = preds[(i * 3) % 5];
  }
  write_manifest(dir / "m.json", "school_budget", dir / "db.sqlite", samples);
  write_text(dir / "preds.json", predictions.dump());

  auto sh = [](const std::string& s) { return "'" + s + "'"; };
  const std::string cli = sh(SQLGRADE_CLI_PATH);
  const auto start = Clock::now();
  const std::string build = cli + " build-golden-cache --manifest " + sh((dir / "m.json").string()) + " --out " +
                            sh((dir / "cache").string()) + " >/dev/null";
  const std::string eval = cli + " eval --mode file-of-predictions --manifest " + sh((dir / "m.json").string()) +
                           " --cache " + sh((dir / "cache").string()) + " --predictions " +
                           sh((dir / "preds.json").string()) + " --out " + sh((dir / "report.json").string()) +
                           " >/dev/null";
  const int b = std::system(build.c_str());
  const int e = std::system(eval.c_str());
  const double secs = seconds_since(start);
  c.expect(WIFEXITED(b) && WEXITSTATUS(b) == 0, "build-golden-cache failed");
  c.expect(WIFEXITED(e) && WEXITSTATUS(e) == 0, "eval failed");
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s");
  if (!c.ok()) return "";

  const auto doc = json::parse(read_text(dir / "report.json"));
  const auto& records = doc["records"];
  c.expect(records.size() == 20, "records " + std::to_string(records.size()));
  double ex = 0, exb = 0, exf = 0;
  for (const auto& r : records) {
    ex += r["EX"].get<double>();
    exb += r["EX_b"].get<double>();
    exf += r["EX_f"].get<double>();
  }
  const auto n = static_cast<double>(records.size());
  c.expect(doc["aggregates"]["EX"].get<double>() == ex / n, "EX aggregate");
  c.expect(doc["aggregates"]["EX_b"].get<double>() == exb / n, "EX_b aggregate");
  c.expect(doc["aggregates"]["EX_f"].get<double>() == exf / n, "EX_f aggregate");
  return "20 samples in " + std::to_string(secs).substr(0, 5) + " s, EX_f " + fmt(exf / n);
}

}  // namespace
}  // namespace sqlgrade::testing

int main() {
  using namespace sqlgrade::testing;
  const std::vector<std::pair<std::string, std::function<std::string(Checks&)>>> criteria{
      {"metric oracle equivalence", metric_oracle},
      {"tau boundary", tau_boundary},
      {"reward table", reward_table},
      {"verbal loop constants", verbal_loop},
      {"judge mechanics", judge_mechanics},
      {"learning-rate schedule", schedule_check},
      {"grpo math", grpo_check},
      {"schema profiler golden file", schema_check},
      {"majority vote", vote_check},
      {"end-to-end smoke", cli_smoke},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checks checks;
    std::string note;
    try {
      note = criteria[i].second(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = checks.ok();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first;
    if (!note.empty()) std::cout << "  (" << note << ")";
    if (!ok) std::cout << checks.summary();
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
