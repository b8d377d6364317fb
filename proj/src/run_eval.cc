#include "sqlgrade/run_eval.h"

#include <cctype>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>

#include "sqlgrade/parallel.h"
#include "sqlgrade/prompts.h"
#include "sqlgrade/schema_profile.h"
#include "sqlgrade/sql_text.h"

namespace sqlgrade {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::kZeroShot:
      return "zero-shot";
    case EvalMode::kVerbalRl:
      return "verbal-rl";
    case EvalMode::kPredictions:
      return "file-of-predictions";
  }
  return "file-of-predictions";
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "zero-shot") return EvalMode::kZeroShot;
  if (s == "verbal-rl") return EvalMode::kVerbalRl;
  if (s == "file-of-predictions") return EvalMode::kPredictions;
  throw std::invalid_argument("unknown eval mode '" + std::string(s) + "'");
}

std::map<std::string, std::string> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read predictions " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::map<std::string, std::string> out;
  auto id_of = [](const json& v) {
    return v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::int64_t>());
  };
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    // A single JSON object spanning the file is a map; otherwise JSONL.
    if (first != std::string::npos && text[first] == '{') {
      json doc;
      bool whole = true;
      try {
        doc = json::parse(text);
      } catch (const json::parse_error&) {
        whole = false;
      }
      if (whole && !doc.contains("question_id")) {
        for (const auto& [k, v] : doc.items()) out[k] = v.get<std::string>();
        return out;
      }
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = json::parse(line);
      out[id_of(j.at("question_id"))] = j.at("sql").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed predictions file " + path.string() + ": " + e.what());
  }
  return out;
}

namespace {

void fill_from_exec(SampleRecord& rec, const ExecOutcome& exec, const ResultTable& golden, const EvalConfig& cfg) {
  rec.exec_status = std::string(to_string(exec.status));
  if (!exec.ok()) {
    rec.error = exec.error_text;
    return;
  }
  const auto o = evaluate(golden, *exec.table, cfg);
  rec.ex_exact = o.ex_exact;
  rec.ex_b = o.ex_b;
  rec.ex_f = o.ex_f;
}

// Question ids become file names; keep them portable.
std::string file_stem(const std::string& id) {
  std::string out = id;
  for (auto& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  }
  return out.empty() || out == "." || out == ".." ? "_" + out : out;
}

class SchemaSource {
 public:
  explicit SchemaSource(const std::map<std::string, std::string>* given) : given_(given) {}

  std::string get(const std::string& db_id, const DatabaseRef& db) {
    if (given_) {
      if (const auto it = given_->find(db_id); it != given_->end()) return it->second;
    }
    std::lock_guard lock(mu_);
    auto it = profiled_.find(db_id);
    if (it == profiled_.end()) it = profiled_.emplace(db_id, profile(db).rendered).first;
    return it->second;
  }

 private:
  const std::map<std::string, std::string>* given_;
  std::mutex mu_;
  std::map<std::string, std::string> profiled_;
};

}  // namespace

RunReport run_eval(const RunInputs& in, const RunConfig& config) {
  if (!in.dataset || !in.cache || !in.sandbox) throw std::invalid_argument("run_eval needs a dataset, cache and sandbox");
  config.eval.validate();
  if (config.mode == EvalMode::kPredictions && !in.predictions) {
    throw std::invalid_argument("file-of-predictions mode needs predictions");
  }
  if (config.mode != EvalMode::kPredictions && !in.client) {
    throw std::invalid_argument(std::string(to_string(config.mode)) + " mode needs a generation client");
  }
  if (config.mode == EvalMode::kVerbalRl) config.verbal.validate();

  RunReport report;
  report.mode = std::string(to_string(config.mode));
  report.seed = config.seed;
  report.config = config.config_snapshot;

  std::vector<const Sample*> todo;
  std::vector<const GoldenEntry*> golden;
  for (const auto& s : in.dataset->samples) {
    const auto* g = in.cache->find_valid(s.db_id, s.question_id, s.gold_sql);
    if (!g) {
      report.skipped.push_back({s.question_id, "no valid golden result in cache"});
      continue;
    }
    todo.push_back(&s);
    golden.push_back(g);
  }

  std::optional<RecordLog> log;
  if (config.log_path) log.emplace(*config.log_path);
  if (config.trace_dir) fs::create_directories(*config.trace_dir);
  SchemaSource schemas(in.schemas);

  std::vector<std::optional<SampleRecord>> records(todo.size());
  parallel_for(todo.size(), config.workers, [&](std::size_t i) {
    const Sample& s = *todo[i];
    if (log) {
      if (const auto it = log->existing().find(s.question_id); it != log->existing().end()) {
        records[i] = it->second;
        if (!config.record_timing) records[i]->elapsed_ms.reset();
        return;
      }
    }
    const auto start = std::chrono::steady_clock::now();
    SampleRecord rec;
    rec.question_id = s.question_id;
    rec.db_id = s.db_id;
    try {
      const auto& db = in.dataset->database(s.db_id);
      const auto& gold = golden[i]->table;
      switch (config.mode) {
        case EvalMode::kPredictions: {
          rec.attempts = 1;
          const auto it = in.predictions->find(s.question_id);
          if (it == in.predictions->end()) {
            rec.error = "no prediction for this sample";
            break;
          }
          rec.final_sql = it->second;
          fill_from_exec(rec, in.sandbox->execute(db, it->second), gold, config.eval);
          break;
        }
        case EvalMode::kZeroShot: {
          rec.attempts = 1;
          PromptFields fields{dialect_display_name(db.dialect), schemas.get(s.db_id, db), s.context.value_or(""),
                              s.question};
          GenRequest req = config.zero_shot;
          req.prompt = generation_prompt(fields);
          const auto res = generate_with_retry(*in.client, req, config.retry);
          if (!res.ok()) {
            rec.error = "generation failed: " + res.error->message;
            break;
          }
          const auto sql = extract_sql(*res.text);
          if (!sql) {
            rec.error = "no sql code block in model output";
            break;
          }
          rec.final_sql = *sql;
          fill_from_exec(rec, in.sandbox->execute(db, *sql), gold, config.eval);
          break;
        }
        case EvalMode::kVerbalRl: {
          PipelineInputs pin;
          pin.sample = &s;
          pin.db = &db;
          pin.schema_text = schemas.get(s.db_id, db);
          pin.golden = &gold;
          pin.eval = config.eval;
          const auto result = run_pipeline(pin, *in.client, *in.sandbox, config.verbal);
          rec.attempts = result.group.attempts_used;
          rec.final_sql = result.final_sql;
          if (result.failure) rec.error = result.failure;
          if (result.final_exec) fill_from_exec(rec, *result.final_exec, gold, config.eval);
          if (config.trace_dir) {
            write_file_atomic(*config.trace_dir / (file_stem(s.question_id) + ".json"),
                              trace_to_json(result, s.question_id).dump(2) + "\n");
          }
          break;
        }
      }
    } catch (const std::exception& e) {
      rec.exec_status = "error";
      rec.error = std::string("sample failed: ") + e.what();
      rec.ex_exact = rec.ex_b = 0;
      rec.ex_f = 0.0;
    }
    if (config.record_timing) {
      rec.elapsed_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    }
    if (log) log->append(rec);
    records[i] = std::move(rec);
  });

  for (auto& r : records) report.records.push_back(std::move(*r));
  report.aggregates = aggregate_records(report.records);
  return report;
}

}  // namespace sqlgrade
