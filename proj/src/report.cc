#include "sqlgrade/report.h"

#include <sstream>

namespace sqlgrade {
namespace fs = std::filesystem;
using nlohmann::json;

std::optional<MetricMeans> aggregate_records(const std::vector<SampleRecord>& records) {
  std::vector<EvalOutcome> outcomes;
  outcomes.reserve(records.size());
  for (const auto& r : records) {
    EvalOutcome o;
    o.ex_exact = r.ex_exact;
    o.ex_b = r.ex_b;
    o.ex_f = r.ex_f;
    outcomes.push_back(o);
  }
  return mean_metrics(outcomes);
}

json record_to_json(const SampleRecord& r) {
  json j{{"question_id", r.question_id},
         {"db_id", r.db_id},
         {"final_sql", r.final_sql ? json(*r.final_sql) : json()},
         {"exec_status", r.exec_status},
         {"error", r.error ? json(*r.error) : json()},
         {"EX", r.ex_exact},
         {"EX_b", r.ex_b},
         {"EX_f", r.ex_f},
         {"attempts", r.attempts}};
  if (r.elapsed_ms) j["elapsed_ms"] = *r.elapsed_ms;
  return j;
}

SampleRecord record_from_json(const json& j) {
  try {
    SampleRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.db_id = j.at("db_id").get<std::string>();
    if (!j.at("final_sql").is_null()) r.final_sql = j["final_sql"].get<std::string>();
    r.exec_status = j.at("exec_status").get<std::string>();
    if (!j.at("error").is_null()) r.error = j["error"].get<std::string>();
    r.ex_exact = j.at("EX").get<int>();
    r.ex_b = j.at("EX_b").get<int>();
    r.ex_f = j.at("EX_f").get<double>();
    r.attempts = j.at("attempts").get<int>();
    if (j.contains("elapsed_ms")) r.elapsed_ms = j["elapsed_ms"].get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed record: ") + e.what());
  }
}

namespace {

json means_to_json(const std::optional<MetricMeans>& m) {
  if (!m) return json();
  return {{"EX", m->ex_exact}, {"EX_b", m->ex_b}, {"EX_f", m->ex_f}};
}

}  // namespace

json report_to_json(const RunReport& report) {
  json records = json::array();
  for (const auto& r : report.records) records.push_back(record_to_json(r));
  json skipped = json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"question_id", s.question_id}, {"reason", s.reason}});
  return {{"mode", report.mode},
          {"seed", report.seed},
          {"config", report.config},
          {"sample_count", report.records.size()},
          {"aggregates", means_to_json(report.aggregates)},
          {"records", std::move(records)},
          {"skipped", std::move(skipped)}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  try {
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    for (const auto& rec : j.at("records")) r.records.push_back(record_from_json(rec));
    for (const auto& s : j.at("skipped")) {
      r.skipped.push_back({s.at("question_id").get<std::string>(), s.at("reason").get<std::string>()});
    }
    const auto& agg = j.at("aggregates");
    if (!agg.is_null()) {
      r.aggregates = MetricMeans{agg.at("EX").get<double>(), agg.at("EX_b").get<double>(), agg.at("EX_f").get<double>()};
    }
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
  const auto expected = aggregate_records(r.records);
  const bool same = expected.has_value() == r.aggregates.has_value() &&
                    (!expected || (expected->ex_exact == r.aggregates->ex_exact &&
                                   expected->ex_b == r.aggregates->ex_b && expected->ex_f == r.aggregates->ex_f));
  if (!same) throw ReportError("report aggregates do not match its records");
  return r;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_report(const fs::path& path, const RunReport& report) {
  write_file_atomic(path, report_to_json(report).dump(2) + "\n");
}

RunReport load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot read report " + path.string());
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
}

RecordLog::RecordLog(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  bool needs_newline = false;
  {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      needs_newline = in.eof();  // last line had no terminator
      if (line.empty()) continue;
      try {
        auto rec = record_from_json(json::parse(line));
        existing_[rec.question_id] = std::move(rec);
      } catch (const std::exception&) {
        // Partial line from an interrupted write.
      }
    }
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open record log " + path.string());
  if (needs_newline) out_ << '\n';
}

void RecordLog::append(const SampleRecord& r) {
  const auto line = record_to_json(r).dump();
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
}

}  // namespace sqlgrade
