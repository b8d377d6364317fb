#include "sqlgrade/dataset.h"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sqlgrade/schema_profile.h"
#include "sqlgrade/sql_text.h"

namespace sqlgrade {
namespace fs = std::filesystem;
using nlohmann::json;

const Sample* Dataset::find(std::string_view question_id) const {
  for (const auto& s : samples) {
    if (s.question_id == question_id) return &s;
  }
  return nullptr;
}

const DatabaseRef& Dataset::database(const std::string& db_id) const {
  const auto it = databases.find(db_id);
  if (it == databases.end()) throw std::out_of_range("unknown db_id '" + db_id + "'");
  return it->second;
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read manifest " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ManifestError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::string required_string(const json& obj, const char* key, std::size_t index) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ManifestError("sample " + std::to_string(index) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

std::string id_string(const json& v, std::size_t index) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ManifestError("sample " + std::to_string(index) + ": question_id must be a string or an integer");
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ManifestError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

fs::path default_db_path(const fs::path& root, const std::string& db_id) {
  const fs::path candidates[] = {root / db_id / (db_id + ".sqlite"), root / (db_id + ".sqlite"),
                                 root / "database" / db_id / (db_id + ".sqlite")};
  for (const auto& c : candidates) {
    if (fs::is_regular_file(c)) return c;
  }
  return candidates[0];
}

ManifestFormat detect(const json& doc) {
  if (doc.is_object()) return ManifestFormat::kCanonical;
  if (doc.is_array() && !doc.empty() && doc.front().is_object()) {
    const auto& first = doc.front();
    if (first.contains("SQL")) return ManifestFormat::kBird;
    if (first.contains("query")) return ManifestFormat::kSpider;
  }
  throw ManifestError("cannot detect manifest format");
}

// Registers every db_id used by the samples, resolving file paths.
void resolve_databases(Dataset& ds, const fs::path& root, const std::map<std::string, json>& explicit_dbs) {
  for (const auto& s : ds.samples) {
    if (ds.databases.count(s.db_id)) continue;
    DatabaseRef ref;
    ref.dialect = s.dialect;
    ref.read_only = true;
    fs::path path;
    if (const auto it = explicit_dbs.find(s.db_id); it != explicit_dbs.end()) {
      if (auto d = optional_string(it->second, "dialect")) ref.dialect = *d;
      const auto p = optional_string(it->second, "path");
      if (!p) throw ManifestError("database '" + s.db_id + "' has no path");
      path = fs::path(*p).is_absolute() ? fs::path(*p) : root / *p;
    } else {
      path = default_db_path(root, s.db_id);
    }
    if (dialect_family(ref.dialect) == DialectFamily::kSqlite) {
      if (!fs::is_regular_file(path)) {
        throw ManifestError("database file for '" + s.db_id + "' not found: " + path.string());
      }
      ref.locator = path.string();
    } else {
      // Network dialects: the path field is a connection descriptor.
      ref.locator = explicit_dbs.count(s.db_id) ? *optional_string(explicit_dbs.at(s.db_id), "path") : s.db_id;
    }
    ds.databases.emplace(s.db_id, std::move(ref));
  }
}

void check_unique(const Dataset& ds) {
  std::set<std::string> seen;
  for (const auto& s : ds.samples) {
    if (!seen.insert(s.question_id).second) throw ManifestError("duplicate question_id '" + s.question_id + "'");
  }
}

}  // namespace

Dataset load_manifest(const fs::path& path, const LoadOptions& options) {
  const json doc = read_json(path);
  const auto format = options.format == ManifestFormat::kAuto ? detect(doc) : options.format;
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  Dataset ds;
  std::map<std::string, json> explicit_dbs;
  fs::path root = options.database_root.value_or(base);
  try {
    if (format == ManifestFormat::kCanonical) {
      if (!doc.is_object() || !doc.contains("samples") || !doc["samples"].is_array()) {
        throw ManifestError("canonical manifest needs a 'samples' array");
      }
      ds.name = doc.value("name", path.stem().string());
      const auto dialect = doc.value("dialect", options.default_dialect);
      if (!options.database_root && doc.contains("database_root")) {
        const fs::path r = doc["database_root"].get<std::string>();
        root = r.is_absolute() ? r : base / r;
      }
      if (doc.contains("databases")) {
        for (const auto& [id, entry] : doc["databases"].items()) explicit_dbs.emplace(id, entry);
      }
      std::size_t i = 0;
      for (const auto& js : doc["samples"]) {
        if (!js.is_object()) throw ManifestError("sample " + std::to_string(i) + " is not an object");
        Sample s;
        if (!js.contains("question_id")) throw ManifestError("sample " + std::to_string(i) + ": missing question_id");
        s.question_id = id_string(js["question_id"], i);
        s.question = required_string(js, "question", i);
        s.context = optional_string(js, "context");
        s.db_id = required_string(js, "db_id", i);
        s.dialect = optional_string(js, "dialect").value_or(dialect);
        if (const auto it = explicit_dbs.find(s.db_id); it != explicit_dbs.end() && !js.contains("dialect")) {
          s.dialect = optional_string(it->second, "dialect").value_or(s.dialect);
        }
        s.gold_sql = required_string(js, "gold_sql", i);
        ds.samples.push_back(std::move(s));
        ++i;
      }
    } else {
      if (!doc.is_array()) throw ManifestError("native question files are JSON arrays");
      ds.name = path.stem().string();
      const bool bird = format == ManifestFormat::kBird;
      std::size_t i = 0;
      for (const auto& js : doc) {
        if (!js.is_object()) throw ManifestError("entry " + std::to_string(i) + " is not an object");
        Sample s;
        s.question = required_string(js, "question", i);
        s.db_id = required_string(js, "db_id", i);
        s.dialect = options.default_dialect;
        if (bird) {
          s.question_id = js.contains("question_id") ? id_string(js["question_id"], i) : std::to_string(i);
          s.gold_sql = required_string(js, "SQL", i);
          auto evidence = optional_string(js, "evidence");
          if (evidence && !evidence->empty()) s.context = std::move(evidence);
        } else {
          s.question_id = std::to_string(i);
          s.gold_sql = required_string(js, "query", i);
        }
        ds.samples.push_back(std::move(s));
        ++i;
      }
    }
  } catch (const json::exception& e) {
    throw ManifestError("malformed manifest " + path.string() + ": " + e.what());
  }
  check_unique(ds);
  resolve_databases(ds, root, explicit_dbs);
  return ds;
}

std::vector<std::string> unresolved_references(const std::string& sql,
                                               const std::map<std::string, std::vector<std::string>>& catalog) {
  std::map<std::string, std::set<std::string>> tables;  // lowercased
  for (const auto& [t, cols] : catalog) {
    auto& set = tables[ascii_lower(t)];
    for (const auto& c : cols) set.insert(ascii_lower(c));
  }

  // alias -> table; an empty table name marks a derived table or CTE whose
  // columns are not checked.
  std::map<std::string, std::string> aliases;
  const auto tokens = tokenize_sql(sql);
  auto is_name = [](const SqlToken& t) {
    return (t.kind == SqlTokenKind::kWord && !is_sql_keyword(t.text)) || t.kind == SqlTokenKind::kQuotedIdent;
  };
  auto is_word = [&](std::size_t i, std::string_view w) {
    return i < tokens.size() && tokens[i].kind == SqlTokenKind::kWord && ascii_lower(tokens[i].text) == w;
  };
  auto is_punct = [&](std::size_t i, std::string_view p) {
    return i < tokens.size() && tokens[i].kind == SqlTokenKind::kPunct && tokens[i].text == p;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    const bool closes = is_punct(i, ")");
    std::string target;
    bool table_like = false;
    if (is_name(t) && !is_punct(i + 1, ".") && !(i > 0 && is_punct(i - 1, "."))) {
      const auto lower = ascii_lower(t.text);
      if (tables.count(lower)) {
        target = lower;
        table_like = true;
      }
    } else if (closes) {
      table_like = true;  // derived table
    }
    if (table_like) {
      std::size_t j = i + 1;
      if (is_word(j, "as")) ++j;
      if (j < tokens.size() && is_name(tokens[j]) && !is_punct(j + 1, "(") && !is_punct(j + 1, ".")) {
        aliases.emplace(ascii_lower(tokens[j].text), target);
      }
    }
    // CTE names: name [ (cols) ] AS (
    if (is_name(t) && !tables.count(ascii_lower(t.text))) {
      std::size_t j = i + 1;
      if (is_punct(j, "(")) {
        while (j < tokens.size() && !is_punct(j, ")")) ++j;
        ++j;
      }
      if (is_word(j, "as") && is_punct(j + 1, "(")) aliases.emplace(ascii_lower(t.text), "");
    }
    // Column aliases after AS.
    if (is_word(i, "as") && i + 1 < tokens.size() && is_name(tokens[i + 1])) {
      aliases.emplace(ascii_lower(tokens[i + 1].text), "");
    }
  }

  std::vector<std::string> problems;
  for (const auto& ref : qualified_references(sql)) {
    const auto q = ascii_lower(ref.qualifier);
    const auto n = ascii_lower(ref.name);
    if (q == "main" || q == "temp") continue;
    std::string table;
    if (const auto a = aliases.find(q); a != aliases.end()) {
      if (a->second.empty()) continue;
      table = a->second;
    } else if (tables.count(q)) {
      table = q;
    } else {
      problems.push_back("unknown qualifier '" + ref.qualifier + "' in " + ref.qualifier + "." + ref.name);
      continue;
    }
    if (n != "*" && !tables[table].count(n)) {
      problems.push_back("table '" + table + "' has no column '" + ref.name + "'");
    }
  }
  return problems;
}

IngestResult ingest(const fs::path& manifest, const Sandbox& sandbox, const IngestOptions& options) {
  IngestResult result;
  Dataset loaded = load_manifest(manifest, options.load);
  result.dataset.name = loaded.name;
  result.dataset.databases = loaded.databases;

  std::map<std::string, std::map<std::string, std::vector<std::string>>> catalogs;
  for (auto& s : loaded.samples) {
    const auto& db = loaded.database(s.db_id);
    std::string reason;
    if (options.check_identifiers && dialect_family(db.dialect) == DialectFamily::kSqlite) {
      auto it = catalogs.find(s.db_id);
      if (it == catalogs.end()) it = catalogs.emplace(s.db_id, catalog(db)).first;
      const auto problems = unresolved_references(s.gold_sql, it->second);
      if (!problems.empty()) reason = "unresolved reference: " + problems.front();
    }
    if (reason.empty() && options.execute_gold) {
      const auto out = sandbox.execute(db, s.gold_sql);
      if (!out.ok()) {
        reason = std::string("gold SQL ") + (out.status == ExecStatus::kTimeout ? "timed out" : "failed") + ": " +
                 out.error_text.value_or("");
      }
    }
    if (reason.empty()) {
      result.dataset.samples.push_back(std::move(s));
    } else {
      result.filtered.push_back({s.question_id, s.db_id, reason});
    }
  }
  return result;
}

}  // namespace sqlgrade
