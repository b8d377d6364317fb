#include "sqlgrade/golden_cache.h"

#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "sqlgrade/hash.h"
#include "sqlgrade/parallel.h"
#include "sqlgrade/table_io.h"

namespace sqlgrade {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string entry_file_name(const GoldenCache::Key& key) {
  return sha256_hex(key.first + '\0' + key.second).substr(0, 24) + ".json";
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

const GoldenEntry* GoldenCache::find(const std::string& db_id, const std::string& question_id) const {
  auto it = entries_.find({db_id, question_id});
  return it == entries_.end() ? nullptr : &it->second;
}

const GoldenEntry* GoldenCache::find_valid(const std::string& db_id, const std::string& question_id,
                                           const std::string& gold_sql) const {
  const auto* e = find(db_id, question_id);
  return e && e->gold_sql_hash == sha256_hex(gold_sql) ? e : nullptr;
}

void GoldenCache::put(const std::string& db_id, const std::string& question_id, GoldenEntry entry) {
  entries_.insert_or_assign({db_id, question_id}, std::move(entry));
}

void GoldenCache::save(const fs::path& dir) const {
  fs::create_directories(dir / "tables");
  json manifest{{"version", 1}, {"entries", json::array()}};
  for (const auto& [key, entry] : entries_) {
    const auto file = entry_file_name(key);
    write_file_atomically(dir / "tables" / file, table_to_json(entry.table).dump());
    manifest["entries"].push_back({{"db_id", key.first},
                                   {"question_id", key.second},
                                   {"gold_sql_hash", entry.gold_sql_hash},
                                   {"file", "tables/" + file}});
  }
  write_file_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
}

GoldenCache GoldenCache::load(const fs::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.is_object() || !manifest.contains("entries") || !manifest["entries"].is_array()) {
    throw std::runtime_error("golden cache manifest has no entries array");
  }
  GoldenCache cache;
  for (const auto& e : manifest["entries"]) {
    try {
      GoldenEntry entry{e.at("gold_sql_hash").get<std::string>(),
                        table_from_json(read_json_file(dir / e.at("file").get<std::string>()))};
      cache.put(e.at("db_id").get<std::string>(), e.at("question_id").get<std::string>(), std::move(entry));
    } catch (const json::exception& ex) {
      throw std::runtime_error(std::string("malformed golden cache entry: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
      throw std::runtime_error(std::string("malformed golden cache table: ") + ex.what());
    }
  }
  return cache;
}

GoldenBuildResult build_golden_cache(const std::vector<Sample>& samples,
                                     const std::map<std::string, DatabaseRef>& databases, const Sandbox& sandbox,
                                     const GoldenCache* previous, std::size_t workers) {
  struct Slot {
    std::optional<GoldenEntry> entry;
    bool hit = false;
    bool executed = false;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(samples.size());

  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const auto& s = samples[i];
    auto& slot = slots[i];
    const auto hash = sha256_hex(s.gold_sql);
    if (previous) {
      if (const auto* e = previous->find(s.db_id, s.question_id); e && e->gold_sql_hash == hash) {
        slot.entry = *e;
        slot.hit = true;
        return;
      }
    }
    auto db = databases.find(s.db_id);
    if (db == databases.end()) {
      slot.error = "unknown database '" + s.db_id + "'";
      return;
    }
    slot.executed = true;
    auto out = sandbox.execute(db->second, s.gold_sql);
    if (!out.ok()) {
      slot.error = std::string(to_string(out.status)) + ": " + out.error_text.value_or("");
      return;
    }
    slot.entry = GoldenEntry{hash, std::move(*out.table)};
  });

  GoldenBuildResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& slot = slots[i];
    if (slot.hit) ++result.report.hits;
    if (slot.executed) ++result.report.executions;
    if (slot.entry) {
      result.cache.put(samples[i].db_id, samples[i].question_id, std::move(*slot.entry));
    } else {
      result.report.failures.push_back({samples[i].db_id, samples[i].question_id, slot.error.value_or("unknown")});
    }
  }
  return result;
}

}  // namespace sqlgrade
