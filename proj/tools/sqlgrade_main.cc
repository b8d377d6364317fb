// Command-line front end: schema profiling, golden caches, evaluation runs,
// majority-vote sweeps, the reward service, LR schedules and table diffs.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqlgrade/dataset.h"
#include "sqlgrade/ensemble.h"
#include "sqlgrade/golden_cache.h"
#include "sqlgrade/http_gen_client.h"
#include "sqlgrade/parallel.h"
#include "sqlgrade/report.h"
#include "sqlgrade/reward_service.h"
#include "sqlgrade/run_eval.h"
#include "sqlgrade/schedule.h"
#include "sqlgrade/schema_profile.h"
#include "sqlgrade/table_io.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sqlgrade;

namespace {

struct EvalFlags {
  int tau = 5;
  bool greedy = false;
  bool no_trim = false;
  bool case_fold = false;
  bool no_unify = false;
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  int timeout_ms = 30'000;
  std::size_t row_cap = 100'000;

  EvalConfig eval() const {
    EvalConfig c;
    c.tau = tau;
    c.matching_mode = greedy ? MatchingMode::kGreedy : MatchingMode::kMaximumBipartite;
    c.policy.text_trim = !no_trim;
    c.policy.text_case_fold = case_fold;
    c.policy.integer_real_unification = !no_unify;
    c.policy.real_tolerance = {rel_tol, abs_tol};
    c.validate();
    return c;
  }

  SandboxOptions sandbox() const {
    SandboxOptions o;
    o.exec.timeout = std::chrono::milliseconds(timeout_ms);
    o.exec.row_cap = row_cap;
    return o;
  }

  json snapshot() const {
    return {{"tau", tau},           {"matching", greedy ? "greedy" : "maximum-bipartite"},
            {"text_trim", !no_trim}, {"text_case_fold", case_fold},
            {"integer_real_unification", !no_unify},
            {"real_tolerance", {{"relative", rel_tol}, {"absolute", abs_tol}}},
            {"timeout_ms", timeout_ms}, {"row_cap", row_cap}};
  }
};

void add_eval_flags(CLI::App* sub, EvalFlags& f) {
  sub->add_option("--tau", f.tau, "Extra-column bound for EX_b")->envname("SQLGRADE_TAU")->check(CLI::PositiveNumber);
  sub->add_flag("--greedy-matching", f.greedy, "Greedy instead of maximum bipartite column matching");
  sub->add_flag("--no-trim", f.no_trim, "Do not trim text values");
  sub->add_flag("--case-fold", f.case_fold, "Lowercase text values before comparing");
  sub->add_flag("--no-unify", f.no_unify, "Keep integers and reals distinct");
  sub->add_option("--rel-tol", f.rel_tol, "Relative tolerance for reals");
  sub->add_option("--abs-tol", f.abs_tol, "Absolute tolerance for reals");
  sub->add_option("--timeout-ms", f.timeout_ms, "Per-query timeout")->envname("SQLGRADE_TIMEOUT_MS");
  sub->add_option("--row-cap", f.row_cap, "Maximum rows kept per result");
}

struct DatasetFlags {
  std::string manifest;
  std::string db_root;
  std::string format = "auto";

  LoadOptions load() const {
    LoadOptions o;
    if (!db_root.empty()) o.database_root = db_root;
    if (format == "canonical") o.format = ManifestFormat::kCanonical;
    if (format == "spider") o.format = ManifestFormat::kSpider;
    if (format == "bird") o.format = ManifestFormat::kBird;
    return o;
  }
};

void add_dataset_flags(CLI::App* sub, DatasetFlags& f) {
  sub->add_option("--manifest", f.manifest, "Dataset manifest (canonical, Spider or BIRD JSON)")
      ->required()
      ->envname("SQLGRADE_MANIFEST");
  sub->add_option("--db-root", f.db_root, "Database root overriding the manifest")->envname("SQLGRADE_DB_ROOT");
  sub->add_option("--format", f.format, "Manifest format")
      ->check(CLI::IsMember({"auto", "canonical", "spider", "bird"}));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + p.string() + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text << std::flush;
  } else {
    write_file_atomic(out, text);
  }
}

// ---- profile-schema

struct ProfileFlags {
  std::string db;
  std::string manifest;
  std::string out;
  std::string json_out;
  std::string descriptions;
  std::string gold_sql;
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  std::size_t extra = 0;
  std::uint64_t seed = 0;
};

SchemaProfile profile_one(const DatabaseRef& db, const ProfileFlags& f) {
  auto p = profile(db);
  if (!f.descriptions.empty()) {
    p = attach_descriptions(std::move(p), read_json_file(f.descriptions)
                                              .get<std::map<std::string, std::map<std::string, std::string>>>());
  }
  if (!f.gold_sql.empty() || f.budget != std::numeric_limits<std::size_t>::max()) {
    p = subset(p, f.gold_sql, SubsetPolicy{f.budget, f.extra, f.seed});
  }
  return p;
}

int run_profile(const ProfileFlags& f) {
  if (f.db.empty() == f.manifest.empty()) throw CLI::ValidationError("give exactly one of --db and --manifest");
  if (!f.db.empty()) {
    DatabaseRef ref{"sqlite", f.db, true};
    const auto p = profile_one(ref, f);
    emit(p.rendered, f.out);
    if (!f.json_out.empty()) write_file_atomic(f.json_out, profile_to_json(p).dump(2) + "\n");
    return 0;
  }
  if (f.out.empty()) throw CLI::ValidationError("--out must name a directory with --manifest");
  const auto ds = load_manifest(f.manifest);
  for (const auto& [id, ref] : ds.databases) {
    if (dialect_family(ref.dialect) != DialectFamily::kSqlite) continue;
    const auto p = profile_one(ref, f);
    write_file_atomic(fs::path(f.out) / (id + ".txt"), p.rendered);
    if (!f.json_out.empty()) write_file_atomic(fs::path(f.json_out) / (id + ".json"), profile_to_json(p).dump(2) + "\n");
  }
  std::cout << "profiled " << ds.databases.size() << " databases into " << f.out << "\n";
  return 0;
}

// ---- build-golden-cache

struct CacheFlags {
  DatasetFlags data;
  EvalFlags eval;
  std::string out;
  std::size_t workers = 4;
  bool no_filter = false;
  std::string report;
};

int run_build_cache(const CacheFlags& f) {
  Sandbox sandbox(f.eval.sandbox());
  IngestOptions io;
  io.load = f.data.load();
  io.check_identifiers = !f.no_filter;
  io.execute_gold = false;  // the cache build itself reports failing gold SQL
  auto ing = ingest(f.data.manifest, sandbox, io);

  std::optional<GoldenCache> previous;
  if (fs::exists(fs::path(f.out) / "manifest.json")) previous = GoldenCache::load(f.out);
  auto built = build_golden_cache(ing.dataset.samples, ing.dataset.databases, sandbox,
                                  previous ? &*previous : nullptr, f.workers);
  built.cache.save(f.out);

  json failures = json::array();
  for (const auto& x : built.report.failures) {
    failures.push_back({{"db_id", x.db_id}, {"question_id", x.question_id}, {"error", x.error}});
  }
  json filtered = json::array();
  for (const auto& x : ing.filtered) {
    filtered.push_back({{"db_id", x.db_id}, {"question_id", x.question_id}, {"reason", x.reason}});
  }
  const json summary{{"samples", ing.dataset.samples.size() + ing.filtered.size()},
                     {"cached", built.cache.size()},
                     {"hits", built.report.hits},
                     {"executions", built.report.executions},
                     {"failures", failures},
                     {"filtered", filtered}};
  if (!f.report.empty()) write_file_atomic(f.report, summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---- eval / verbal-rl

struct RunFlags {
  DatasetFlags data;
  EvalFlags eval;
  std::string cache;
  std::string mode = "file-of-predictions";
  std::string predictions;
  std::string out;
  std::string log;
  std::string trace_dir;
  std::string schemas_dir;
  std::size_t workers = 1;
  bool no_timing = false;
  std::uint64_t seed = 0;
  // generation
  std::string gen_url;
  std::string model = "default";
  double temperature = 1.0;
  double judge_temperature = 1.0;
  int max_tokens = 4096;
  int retries = 3;
  // verbal loop
  int k = 10;
  int cap = 200;
  int repeats = 20;
  bool no_clamp = false;
  bool z_normalize = false;
  bool keep_attempts_on_transport_error = false;
};

void add_run_flags(CLI::App* sub, RunFlags& f, bool with_mode) {
  add_dataset_flags(sub, f.data);
  add_eval_flags(sub, f.eval);
  sub->add_option("--cache", f.cache, "Golden cache directory")->required()->envname("SQLGRADE_CACHE");
  if (with_mode) {
    sub->add_option("--mode", f.mode, "Evaluation mode")
        ->check(CLI::IsMember({"zero-shot", "verbal-rl", "file-of-predictions"}));
  }
  sub->add_option("--predictions", f.predictions, "Predictions (JSON map or JSONL) for file-of-predictions");
  sub->add_option("--out", f.out, "Report path (stdout when omitted)");
  sub->add_option("--log", f.log, "Append-only record log used to resume interrupted runs");
  sub->add_option("--trace-dir", f.trace_dir, "Directory for per-sample verbal-rl traces");
  sub->add_option("--schemas-dir", f.schemas_dir, "Precomputed schema strings <db_id>.txt");
  sub->add_option("--workers", f.workers, "Samples evaluated in parallel")->check(CLI::PositiveNumber);
  sub->add_flag("--no-timing", f.no_timing, "Omit per-sample timings for byte-stable reports");
  sub->add_option("--seed", f.seed, "Seed for decoding and tie-breaking");
  sub->add_option("--gen-url", f.gen_url, "Chat-completions base URL")->envname("SQLGRADE_GEN_URL");
  sub->add_option("--model", f.model, "Model name sent to the generation service")->envname("SQLGRADE_GEN_MODEL");
  sub->add_option("--temperature", f.temperature, "Generation temperature");
  sub->add_option("--judge-temperature", f.judge_temperature, "Judge temperature");
  sub->add_option("--max-tokens", f.max_tokens, "Maximum generated tokens");
  sub->add_option("--retries", f.retries, "Calls per request before a transport error is final");
  sub->add_option("-k,--k-required", f.k, "Distinct executable candidates to collect");
  sub->add_option("--attempt-cap", f.cap, "Maximum generation attempts per sample");
  sub->add_option("--judge-repeats", f.repeats, "Scoring calls per sample");
  sub->add_flag("--no-clamp", f.no_clamp, "Do not clamp judge scores to [0, 1]");
  sub->add_flag("--z-normalize", f.z_normalize, "Z-normalize mean scores within the group");
  sub->add_flag("--free-transport-errors", f.keep_attempts_on_transport_error,
                "Generation transport errors do not consume attempts");
}

std::map<std::string, std::string> load_schema_dir(const std::string& dir) {
  std::map<std::string, std::string> out;
  if (dir.empty()) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") out[e.path().stem().string()] = read_file(e.path());
  }
  return out;
}

int run_eval_cmd(const RunFlags& f) {
  const auto eval_cfg = f.eval.eval();
  Sandbox sandbox(f.eval.sandbox());
  const auto dataset = load_manifest(f.data.manifest, f.data.load());
  const auto cache = GoldenCache::load(f.cache);

  RunConfig cfg;
  cfg.mode = parse_eval_mode(f.mode);
  cfg.eval = eval_cfg;
  cfg.workers = f.workers;
  cfg.record_timing = !f.no_timing;
  cfg.seed = f.seed;
  if (!f.log.empty()) cfg.log_path = f.log;
  if (!f.trace_dir.empty()) cfg.trace_dir = f.trace_dir;
  cfg.retry.max_attempts = f.retries;
  cfg.zero_shot = GenRequest{f.model, "", f.temperature, f.max_tokens, f.seed};
  cfg.verbal.k_required = f.k;
  cfg.verbal.attempt_cap = f.cap;
  cfg.verbal.judge_repeats = f.repeats;
  cfg.verbal.clamp = !f.no_clamp;
  cfg.verbal.z_normalize = f.z_normalize;
  cfg.verbal.tie_break_seed = f.seed;
  cfg.verbal.transport_errors_consume_attempts = !f.keep_attempts_on_transport_error;
  cfg.verbal.retry = cfg.retry;
  cfg.verbal.generation = GenRequest{f.model, "", f.temperature, f.max_tokens, f.seed};
  cfg.verbal.judging = GenRequest{f.model, "", f.judge_temperature, f.max_tokens, f.seed};

  json snapshot = f.eval.snapshot();
  snapshot["mode"] = f.mode;
  snapshot["workers"] = f.workers;
  if (cfg.mode != EvalMode::kPredictions) {
    snapshot["model"] = f.model;
    snapshot["temperature"] = f.temperature;
    snapshot["max_tokens"] = f.max_tokens;
  }
  if (cfg.mode == EvalMode::kVerbalRl) {
    snapshot["verbal"] = {{"k_required", f.k},       {"attempt_cap", f.cap},
                          {"judge_repeats", f.repeats}, {"clamp", !f.no_clamp},
                          {"z_normalize", f.z_normalize}, {"judge_temperature", f.judge_temperature}};
  }
  cfg.config_snapshot = snapshot;

  std::map<std::string, std::string> predictions;
  std::unique_ptr<TextGenerator> client;
  if (cfg.mode == EvalMode::kPredictions) {
    if (f.predictions.empty()) throw CLI::ValidationError("--predictions is required for file-of-predictions");
    predictions = load_predictions(f.predictions);
  } else {
    HttpGenConfig gc = f.gen_url.empty() ? HttpGenConfig::from_env() : HttpGenConfig{};
    if (!f.gen_url.empty()) {
      if (const char* t = std::getenv("SQLGRADE_GEN_TOKEN")) gc.token = t;
      if (const char* t = std::getenv("SQLGRADE_GEN_TIMEOUT")) gc.timeout = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::stod(t) * 1000.0));
      gc.base_url = f.gen_url;
    }
    client = std::make_unique<HttpGenClient>(gc);
  }
  const auto schemas = load_schema_dir(f.schemas_dir);

  RunInputs in;
  in.dataset = &dataset;
  in.cache = &cache;
  in.sandbox = &sandbox;
  in.client = client.get();
  in.predictions = &predictions;
  in.schemas = &schemas;
  const auto report = run_eval(in, cfg);
  const auto text = report_to_json(report).dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_report(f.out, report);
    const auto m = report.aggregates.value_or(MetricMeans{});
    std::cout << "samples " << report.records.size() << "  EX " << m.ex_exact << "  EX_b " << m.ex_b << "  EX_f "
              << m.ex_f << "\n";
  }
  return 0;
}

// ---- vote-sweep

struct SweepFlags {
  DatasetFlags data;
  EvalFlags eval;
  std::string cache;
  std::string pool;
  std::vector<std::size_t> sizes{8, 16, 32, 64, 128};
  std::string equivalence = "result-table";
  std::string out;
  std::string json_out;
  std::size_t workers = 1;
};

int run_sweep(const SweepFlags& f) {
  const auto eval_cfg = f.eval.eval();
  Sandbox sandbox(f.eval.sandbox());
  const auto dataset = load_manifest(f.data.manifest, f.data.load());
  const auto cache = GoldenCache::load(f.cache);
  const auto pool = read_json_file(f.pool);
  if (!pool.contains("samples") || !pool["samples"].is_array()) {
    throw std::runtime_error("candidate pool needs a 'samples' array");
  }

  std::vector<SweepSample> samples;
  std::vector<SweepSkip> unusable;
  for (const auto& js : pool["samples"]) {
    const auto qid = js.at("question_id").is_string() ? js["question_id"].get<std::string>()
                                                      : std::to_string(js["question_id"].get<std::int64_t>());
    const Sample* s = dataset.find(qid);
    const GoldenEntry* g = s ? cache.find_valid(s->db_id, s->question_id, s->gold_sql) : nullptr;
    if (!g) {
      unusable.push_back({qid, s ? "no valid golden result in cache" : "unknown question_id"});
      continue;
    }
    SweepSample ss;
    ss.question_id = qid;
    ss.golden = g->table;
    ss.candidates.resize(js.at("candidates").size());
    samples.push_back(std::move(ss));
    auto& cands = samples.back().candidates;
    const auto& db = dataset.database(s->db_id);
    const auto& sqls = js["candidates"];
    parallel_for(cands.size(), f.workers, [&](std::size_t i) {
      cands[i].sql = sqls[i].get<std::string>();
      cands[i].exec = sandbox.execute(db, cands[i].sql);
    });
  }

  VoteConfig vc;
  vc.equivalence = parse_vote_equivalence(f.equivalence);
  vc.eval = eval_cfg;
  auto result = sweep(samples, f.sizes, vc, f.workers);
  result.skipped.insert(result.skipped.begin(), unusable.begin(), unusable.end());
  emit(sweep_csv(result), f.out);
  if (!f.json_out.empty()) write_file_atomic(f.json_out, sweep_json(result).dump(2) + "\n");
  for (const auto& s : result.skipped) std::cerr << "skipped " << s.question_id << ": " << s.reason << "\n";
  return 0;
}

// ---- serve-rewards

struct ServeFlags {
  DatasetFlags data;
  EvalFlags eval;
  std::string cache;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 8;
  std::size_t workers = 4;
};

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int run_serve(const ServeFlags& f) {
  if (!fs::exists(fs::path(f.cache) / "manifest.json")) {
    throw std::runtime_error("golden cache missing at " + f.cache + " (run build-golden-cache first)");
  }
  Sandbox sandbox(f.eval.sandbox());
  auto dataset = load_manifest(f.data.manifest, f.data.load());
  auto cache = GoldenCache::load(f.cache);
  RewardServiceConfig rc;
  rc.host = f.host;
  rc.port = f.port;
  rc.eval = f.eval.eval();
  rc.server_threads = f.threads;
  rc.workers_per_request = f.workers;
  RewardService service(std::move(dataset), std::move(cache), sandbox, rc);
  const int port = service.bind();
  std::cout << "listening on " << f.host << ":" << port << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::jthread watcher([&service](std::stop_token st) {
    while (!st.stop_requested() && !g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
  });
  service.run();
  watcher.request_stop();
  return 0;
}

// ---- schedule

struct ScheduleFlags {
  std::int64_t total_steps = 1000;
  double warmup_lr = 1e-7;
  double max_lr = 1e-5;
  double warmup_frac = 0.03;
  double ramp_end_frac = 0.10;
  std::optional<double> floor_lr;
  std::string stage = "one";
  std::optional<double> basis;
  std::optional<std::int64_t> best_step;
  std::string curve;
  Stage2Thresholds thresholds;
  std::string out;
};

std::vector<double> read_curve(const std::string& path) {
  std::vector<double> out;
  std::istringstream lines(read_file(path));
  std::string line;
  while (std::getline(lines, line)) {
    const auto comma = line.find_last_of(',');
    const auto field = comma == std::string::npos ? line : line.substr(comma + 1);
    if (field.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      if (out.empty()) continue;  // header line
      throw std::runtime_error("bad accuracy value '" + field + "' in " + path);
    }
  }
  return out;
}

int run_schedule(const ScheduleFlags& f) {
  ScheduleSpec spec;
  spec.total_steps = f.total_steps;
  spec.warmup_lr = f.warmup_lr;
  spec.max_lr = f.max_lr;
  spec.warmup_frac = f.warmup_frac;
  spec.ramp_end_frac = f.ramp_end_frac;
  spec.floor_lr = f.floor_lr;

  std::optional<Stage2Report> advice;
  if (!f.curve.empty()) {
    advice = stage2_mode(read_curve(f.curve), f.thresholds);
    const json j{{"mode", std::string(to_string(advice->mode))},
                 {"first_half_slope", advice->first_half_slope},
                 {"first_half_r2", advice->first_half_r2},
                 {"last_quartile_slope", advice->last_quartile_slope},
                 {"thresholds",
                  {{"min_slope", f.thresholds.min_slope},
                   {"min_r2", f.thresholds.min_r2},
                   {"plateau_fraction", f.thresholds.plateau_fraction}}}};
    std::cerr << j.dump() << "\n";
  }
  if (f.stage == "auto") {
    if (!advice) throw CLI::ValidationError("--stage auto needs --accuracy-curve");
    spec.stage = advice->mode == Stage2Mode::kPlateau ? ScheduleStage::kTwoPlateau : ScheduleStage::kTwoFluctuating;
  } else {
    spec.stage = parse_schedule_stage(f.stage);
  }
  if (spec.stage == ScheduleStage::kTwoFluctuating) {
    if (f.basis) {
      spec.stage2_start_lr_basis = f.basis;
    } else if (f.best_step) {
      ScheduleSpec one = spec;
      one.stage = ScheduleStage::kOne;
      one.total_steps = f.total_steps;
      spec.stage2_start_lr_basis = checkpoint_lr(*f.best_step, one);
    } else {
      throw CLI::ValidationError("two-fluctuating needs --basis or --best-step");
    }
  }
  emit(schedule_csv(spec), f.out);
  return 0;
}

// ---- diff

struct DiffFlags {
  EvalFlags eval;
  std::string golden;
  std::string candidate;
  std::string db;
  std::string golden_sql;
  std::string candidate_sql;
};

int run_diff(const DiffFlags& f) {
  const auto cfg = f.eval.eval();
  ResultTable golden, candidate;
  if (!f.golden.empty() || !f.candidate.empty()) {
    if (f.golden.empty() || f.candidate.empty()) throw CLI::ValidationError("give both --golden and --candidate");
    golden = table_from_json(read_json_file(f.golden));
    candidate = table_from_json(read_json_file(f.candidate));
  } else {
    if (f.db.empty() || f.golden_sql.empty() || f.candidate_sql.empty()) {
      throw CLI::ValidationError("give --golden/--candidate tables or --db with --golden-sql and --candidate-sql");
    }
    Sandbox sandbox(f.eval.sandbox());
    const DatabaseRef ref{"sqlite", f.db, true};
    auto run = [&](const std::string& sql, const char* which) {
      auto out = sandbox.execute(ref, sql);
      if (!out.ok()) {
        throw std::runtime_error(std::string(which) + " SQL failed (" + std::string(to_string(out.status)) +
                                 "): " + out.error_text.value_or(""));
      }
      return std::move(*out.table);
    };
    golden = run(f.golden_sql, "golden");
    candidate = run(f.candidate_sql, "candidate");
  }
  auto j = outcome_to_json(evaluate(golden, candidate, cfg));
  j["golden_columns"] = golden.column_names();
  j["candidate_columns"] = candidate.column_names();
  j["golden_rows"] = golden.row_count();
  j["candidate_rows"] = candidate.row_count();
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-SQL evaluation and execution-reward toolkit"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags override it");
  app.require_subcommand(1);

  ProfileFlags pf;
  auto* profile_cmd = app.add_subcommand("profile-schema", "Render enriched schema strings");
  profile_cmd->add_option("--db", pf.db, "SQLite database file");
  profile_cmd->add_option("--manifest", pf.manifest, "Profile every database of a manifest");
  profile_cmd->add_option("--out", pf.out, "Output file (directory with --manifest); stdout when omitted");
  profile_cmd->add_option("--json", pf.json_out, "Also write the profile as JSON");
  profile_cmd->add_option("--descriptions", pf.descriptions, "JSON {table: {column: description}}");
  profile_cmd->add_option("--gold-sql", pf.gold_sql, "Keep columns referenced by this SQL when subsetting");
  profile_cmd->add_option("--budget", pf.budget, "Maximum rendered characters");
  profile_cmd->add_option("--extra-columns", pf.extra, "Randomly sampled extra columns kept by subsetting");
  profile_cmd->add_option("--seed", pf.seed, "Subsetting seed");

  CacheFlags cf;
  auto* cache_cmd = app.add_subcommand("build-golden-cache", "Execute gold SQL once and persist the results");
  add_dataset_flags(cache_cmd, cf.data);
  add_eval_flags(cache_cmd, cf.eval);
  cache_cmd->add_option("--out", cf.out, "Cache directory")->required();
  cache_cmd->add_option("--workers", cf.workers, "Parallel gold executions")->check(CLI::PositiveNumber);
  cache_cmd->add_flag("--no-filter", cf.no_filter, "Skip the identifier-resolution filter");
  cache_cmd->add_option("--report", cf.report, "Write the build summary to this file");

  RunFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a dataset and write a run report");
  add_run_flags(eval_cmd, ef, true);

  RunFlags vf;
  vf.mode = "verbal-rl";
  auto* verbal_cmd = app.add_subcommand("verbal-rl", "Run the generate-and-judge pipeline over a dataset");
  add_run_flags(verbal_cmd, vf, false);

  SweepFlags sf;
  auto* sweep_cmd = app.add_subcommand("vote-sweep", "Majority-vote accuracy across ensemble sizes");
  add_dataset_flags(sweep_cmd, sf.data);
  add_eval_flags(sweep_cmd, sf.eval);
  sweep_cmd->add_option("--cache", sf.cache, "Golden cache directory")->required();
  sweep_cmd->add_option("--pool", sf.pool, "JSON {samples: [{question_id, candidates: [sql, ...]}]}")->required();
  sweep_cmd->add_option("--sizes", sf.sizes, "Ensemble sizes")->delimiter(',');
  sweep_cmd->add_option("--equivalence", sf.equivalence, "Clustering relation")
      ->check(CLI::IsMember({"result-table", "normalized-sql"}));
  sweep_cmd->add_option("--out", sf.out, "CSV output (stdout when omitted)");
  sweep_cmd->add_option("--json", sf.json_out, "Also write JSON");
  sweep_cmd->add_option("--workers", sf.workers, "Parallel executions")->check(CLI::PositiveNumber);

  ServeFlags svf;
  auto* serve_cmd = app.add_subcommand("serve-rewards", "Serve execution rewards over HTTP");
  add_dataset_flags(serve_cmd, svf.data);
  add_eval_flags(serve_cmd, svf.eval);
  serve_cmd->add_option("--cache", svf.cache, "Golden cache directory")->required()->envname("SQLGRADE_CACHE");
  serve_cmd->add_option("--host", svf.host, "Bind address")->envname("SQLGRADE_HOST");
  serve_cmd->add_option("--port", svf.port, "Port (0 picks a free one)")->envname("SQLGRADE_PORT");
  serve_cmd->add_option("--threads", svf.threads, "HTTP worker threads")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--workers", svf.workers, "Parallel executions per request")->check(CLI::PositiveNumber);

  ScheduleFlags schf;
  auto* sched_cmd = app.add_subcommand("schedule", "Emit a learning-rate schedule as CSV");
  sched_cmd->add_option("--total-steps", schf.total_steps, "Steps in this stage")->check(CLI::PositiveNumber);
  sched_cmd->add_option("--warmup-lr", schf.warmup_lr, "Flat warm-up learning rate");
  sched_cmd->add_option("--max-lr", schf.max_lr, "Peak learning rate");
  sched_cmd->add_option("--warmup-frac", schf.warmup_frac, "Share of steps at the warm-up rate");
  sched_cmd->add_option("--ramp-end-frac", schf.ramp_end_frac, "Share of steps where the ramp ends");
  sched_cmd->add_option("--floor-lr", schf.floor_lr, "Cosine floor (defaults to the warm-up rate)");
  sched_cmd->add_option("--stage", schf.stage, "Schedule stage")
      ->check(CLI::IsMember({"one", "two-plateau", "two-fluctuating", "auto"}));
  sched_cmd->add_option("--basis", schf.basis, "Best-checkpoint learning rate for two-fluctuating");
  sched_cmd->add_option("--best-step", schf.best_step, "Best stage-one step; derives --basis");
  sched_cmd->add_option("--accuracy-curve", schf.curve, "Validation accuracy per evaluation, one per line");
  sched_cmd->add_option("--min-slope", schf.thresholds.min_slope, "Plateau test: minimum first-half slope");
  sched_cmd->add_option("--min-r2", schf.thresholds.min_r2, "Plateau test: minimum first-half fit R^2");
  sched_cmd->add_option("--plateau-fraction", schf.thresholds.plateau_fraction,
                        "Plateau test: last-quartile slope share");
  sched_cmd->add_option("--out", schf.out, "CSV output (stdout when omitted)");

  DiffFlags df;
  auto* diff_cmd = app.add_subcommand("diff", "Compare two result tables");
  add_eval_flags(diff_cmd, df.eval);
  diff_cmd->add_option("--golden", df.golden, "Golden table JSON");
  diff_cmd->add_option("--candidate", df.candidate, "Candidate table JSON");
  diff_cmd->add_option("--db", df.db, "SQLite database for --golden-sql/--candidate-sql");
  diff_cmd->add_option("--golden-sql", df.golden_sql, "Golden SQL");
  diff_cmd->add_option("--candidate-sql", df.candidate_sql, "Candidate SQL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*profile_cmd) return run_profile(pf);
    if (*cache_cmd) return run_build_cache(cf);
    if (*eval_cmd) return run_eval_cmd(ef);
    if (*verbal_cmd) return run_eval_cmd(vf);
    if (*sweep_cmd) return run_sweep(sf);
    if (*serve_cmd) return run_serve(svf);
    if (*sched_cmd) return run_schedule(schf);
    if (*diff_cmd) return run_diff(df);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
