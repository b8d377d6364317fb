#include "sqlgrade/schema_profile.h"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "sqlgrade/rng.h"
#include "sqlgrade/sql_text.h"

namespace sqlgrade {
namespace {

std::string quote_ident(std::string_view name) {
  std::string s = "\"";
  for (char c : name) {
    s.push_back(c);
    if (c == '"') s.push_back('"');
  }
  s.push_back('"');
  return s;
}

std::string quote_literal(std::string_view text) {
  std::string s = "'";
  for (char c : text) {
    s.push_back(c);
    if (c == '\'') s.push_back('\'');
  }
  s.push_back('\'');
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

class Introspector {
 public:
  explicit Introspector(const DatabaseRef& db) {
    if (dialect_family(db.dialect) != DialectFamily::kSqlite) {
      throw std::runtime_error("schema profiling supports sqlite databases only, got '" + db.dialect + "'");
    }
    DatabaseRef ro = db;
    ro.read_only = true;
    conn_ = SqliteDriver().connect(ro);
    options_.timeout = std::chrono::minutes(10);
    options_.row_cap = std::numeric_limits<std::size_t>::max();
  }

  ResultTable query(const std::string& sql) {
    auto out = conn_->run(sql, options_);
    if (!out.ok()) throw std::runtime_error("introspection query failed: " + out.error_text.value_or("") + " [" + sql + "]");
    return std::move(*out.table);
  }

  std::vector<std::string> tables() {
    const auto t = query(
        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
        "ORDER BY rowid");
    std::vector<std::string> names;
    for (const auto& c : t.column(0)) names.push_back(c.as_text());
    return names;
  }

 private:
  std::unique_ptr<Connection> conn_;
  ExecOptions options_;
};

std::string cell_text(const CellValue& v) {
  return v.kind() == CellKind::kText ? v.as_text() : v.to_display();
}

ColumnStats numeric_stats(Introspector& db, const std::string& table, const std::string& column) {
  const auto q = quote_ident(column);
  const auto t = db.query("SELECT MIN(" + q + "), MAX(" + q + ") FROM " + quote_ident(table) + " WHERE typeof(" + q +
                          ") IN ('integer', 'real')");
  if (t.row_count() == 0 || t.column(0)[0].is_null()) return std::monostate{};
  return NumericStats{t.column(0)[0], t.column(1)[0]};
}

ColumnStats text_stats(Introspector& db, const std::string& table, const std::string& column) {
  const auto q = quote_ident(column);
  const auto t = db.query("SELECT " + q + ", COUNT(*) AS freq FROM " + quote_ident(table) + " WHERE " + q +
                          " IS NOT NULL AND typeof(" + q + ") <> 'blob' GROUP BY " + q + " ORDER BY freq DESC, " + q +
                          " COLLATE BINARY ASC LIMIT 3");
  if (t.row_count() == 0) return std::monostate{};
  TextStats s;
  for (const auto& v : t.column(0)) s.modes.push_back(single_line(cell_text(v)));
  return s;
}

// Value inspection for columns whose declared type has no affinity.
std::optional<ColumnClass> inspect_values(Introspector& db, const std::string& table, const std::string& column) {
  const auto q = quote_ident(column);
  const auto t = db.query("SELECT SUM(typeof(" + q + ") IN ('integer', 'real')), SUM(typeof(" + q +
                          ") = 'text') FROM " + quote_ident(table));
  const auto count = [](const CellValue& v) { return v.kind() == CellKind::kInteger ? v.as_integer() : 0; };
  const auto numeric = count(t.column(0)[0]);
  const auto text = count(t.column(1)[0]);
  if (text > 0) return ColumnClass::kText;
  if (numeric > 0) return ColumnClass::kNumeric;
  return std::nullopt;
}

bool contains(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

std::optional<ColumnClass> classify_declared_type(std::string_view declared_type) {
  const auto t = upper(declared_type);
  if (contains(t, "INT")) return ColumnClass::kNumeric;
  if (contains(t, "CHAR") || contains(t, "CLOB") || contains(t, "TEXT")) return ColumnClass::kText;
  if (contains(t, "BLOB")) return ColumnClass::kNone;
  if (t.find_first_not_of(" \t") == std::string::npos) return std::nullopt;
  return ColumnClass::kNumeric;  // REAL, FLOA, DOUB and the NUMERIC catch-all
}

std::map<std::string, std::vector<std::string>> catalog(const DatabaseRef& db) {
  Introspector in(db);
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& table : in.tables()) {
    auto& cols = out[table];
    const auto info = in.query("SELECT name FROM pragma_table_info(" + quote_literal(table) + ") ORDER BY cid");
    for (const auto& c : info.column(0)) cols.push_back(c.as_text());
  }
  return out;
}

SchemaProfile profile(const DatabaseRef& db) {
  Introspector in(db);
  SchemaProfile p;
  for (const auto& table : in.tables()) {
    TableProfile tp;
    tp.name = table;
    const auto info =
        in.query("SELECT name, type, pk FROM pragma_table_info(" + quote_literal(table) + ") ORDER BY cid");
    std::vector<std::pair<std::int64_t, std::string>> pk;
    for (std::size_t r = 0; r < info.row_count(); ++r) {
      ColumnProfile cp;
      cp.name = info.column(0)[r].as_text();
      cp.declared_type = info.column(1)[r].kind() == CellKind::kText ? info.column(1)[r].as_text() : "";
      const auto pk_pos = info.column(2)[r].as_integer();
      cp.is_pk = pk_pos > 0;
      if (cp.is_pk) pk.emplace_back(pk_pos, cp.name);
      tp.columns.push_back(std::move(cp));
    }
    std::sort(pk.begin(), pk.end());
    for (auto& [pos, name] : pk) tp.primary_key.push_back(name);

    const auto fks = in.query("SELECT id, seq, \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(" +
                              quote_literal(table) + ") ORDER BY id, seq");
    std::map<std::int64_t, ForeignKey> by_id;
    for (std::size_t r = 0; r < fks.row_count(); ++r) {
      auto& fk = by_id[fks.column(0)[r].as_integer()];
      fk.ref_table = fks.column(2)[r].as_text();
      fk.columns.push_back(fks.column(3)[r].as_text());
      fk.ref_columns.push_back(fks.column(4)[r].is_null() ? "" : fks.column(4)[r].as_text());
    }
    for (auto& [id, fk] : by_id) {
      // A NULL target column means the parent's primary key.
      if (std::any_of(fk.ref_columns.begin(), fk.ref_columns.end(), [](const auto& c) { return c.empty(); })) {
        const auto parent_pk = in.query("SELECT name FROM pragma_table_info(" + quote_literal(fk.ref_table) +
                                        ") WHERE pk > 0 ORDER BY pk");
        for (std::size_t k = 0; k < fk.ref_columns.size() && k < parent_pk.row_count(); ++k) {
          if (fk.ref_columns[k].empty()) fk.ref_columns[k] = parent_pk.column(0)[k].as_text();
        }
      }
      for (std::size_t k = 0; k < fk.columns.size(); ++k) {
        for (auto& col : tp.columns) {
          if (col.name == fk.columns[k] && !col.fk_target) col.fk_target = ColumnRef{fk.ref_table, fk.ref_columns[k]};
        }
      }
      tp.foreign_keys.push_back(std::move(fk));
    }

    for (auto& col : tp.columns) {
      auto cls = classify_declared_type(col.declared_type);
      if (!cls) cls = inspect_values(in, table, col.name);
      if (cls == ColumnClass::kNumeric) {
        col.stats = numeric_stats(in, table, col.name);
        // A numeric column holding only text still gets example values.
        if (std::holds_alternative<std::monostate>(col.stats)) col.stats = text_stats(in, table, col.name);
      } else if (cls == ColumnClass::kText) {
        col.stats = text_stats(in, table, col.name);
      }
    }
    p.tables.push_back(std::move(tp));
  }
  p.rendered = render(p);
  return p;
}

std::string render(const SchemaProfile& profile) {
  std::string out;
  for (const auto& t : profile.tables) {
    out += t.name + " \n";
    out += "CREATE TABLE " + t.name + " (\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      const auto& c = t.columns[i];
      std::string line = c.name;
      if (!c.declared_type.empty()) line += "  " + upper(c.declared_type);
      line += ",";
      if (const auto* n = std::get_if<NumericStats>(&c.stats)) {
        line += "  --MIN " + cell_text(n->min) + "  MAX " + cell_text(n->max) + ",";
      } else if (const auto* s = std::get_if<TextStats>(&c.stats)) {
        line += "  --Example  ";
        for (std::size_t k = 0; k < s->modes.size(); ++k) {
          if (k > 0) line += ", ";
          line += s->modes[k];
        }
        line += ",";
      }
      if (c.description) line += "  --Description: " + single_line(*c.description);
      if (i + 1 == t.columns.size()) line += " ";
      out += line + "\n";
    }
    std::vector<std::string> clauses;
    if (!t.primary_key.empty()) {
      std::string pk = "PRIMARY KEY(";
      for (std::size_t k = 0; k < t.primary_key.size(); ++k) pk += (k ? "," : "") + quote_ident(t.primary_key[k]);
      clauses.push_back(pk + ")");
    }
    for (const auto& fk : t.foreign_keys) {
      std::string s = "FOREIGN KEY(";
      for (std::size_t k = 0; k < fk.columns.size(); ++k) s += (k ? "," : "") + quote_ident(fk.columns[k]);
      s += ") REFERENCES " + quote_ident(fk.ref_table) + "(";
      for (std::size_t k = 0; k < fk.ref_columns.size(); ++k) s += (k ? "," : "") + quote_ident(fk.ref_columns[k]);
      clauses.push_back(s + ")");
    }
    for (std::size_t k = 0; k < clauses.size(); ++k) out += clauses[k] + (k + 1 < clauses.size() ? ",\n" : "\n");
    out += ");\n";
  }
  return out;
}

SchemaProfile attach_descriptions(SchemaProfile profile,
                                  const std::map<std::string, std::map<std::string, std::string>>& descriptions) {
  for (auto& t : profile.tables) {
    for (const auto& [table, cols] : descriptions) {
      if (ascii_lower(table) != ascii_lower(t.name)) continue;
      for (auto& c : t.columns) {
        for (const auto& [col, text] : cols) {
          if (ascii_lower(col) == ascii_lower(c.name)) c.description = text;
        }
      }
    }
  }
  profile.rendered = render(profile);
  return profile;
}

SchemaProfile subset(const SchemaProfile& profile, const std::string& gold_sql, const SubsetPolicy& policy) {
  if (render(profile).size() <= policy.budget) {
    SchemaProfile same = profile;
    same.rendered = render(same);
    return same;
  }

  std::set<std::string> referenced;
  for (const auto& id : identifier_tokens(gold_sql)) referenced.insert(ascii_lower(id));

  std::set<std::pair<std::string, std::string>> fk_targets;
  for (const auto& t : profile.tables) {
    for (const auto& fk : t.foreign_keys) {
      for (const auto& rc : fk.ref_columns) fk_targets.insert({ascii_lower(fk.ref_table), ascii_lower(rc)});
    }
  }

  // keep[t][c]
  std::vector<std::vector<bool>> keep(profile.tables.size());
  std::vector<std::pair<std::size_t, std::size_t>> optional_columns;
  for (std::size_t ti = 0; ti < profile.tables.size(); ++ti) {
    const auto& t = profile.tables[ti];
    keep[ti].assign(t.columns.size(), false);
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const auto& c = t.columns[ci];
      const bool is_key = c.is_pk || c.fk_target.has_value() ||
                          fk_targets.count({ascii_lower(t.name), ascii_lower(c.name)}) > 0;
      if (is_key || referenced.count(ascii_lower(c.name))) {
        keep[ti][ci] = true;
      } else {
        optional_columns.emplace_back(ti, ci);
      }
    }
  }

  std::mt19937_64 gen(policy.rng_seed);
  seeded_shuffle(optional_columns, gen);
  if (optional_columns.size() > policy.extra_sample_count) optional_columns.resize(policy.extra_sample_count);

  auto build = [&](std::size_t extras) {
    auto k = keep;
    for (std::size_t i = 0; i < extras; ++i) k[optional_columns[i].first][optional_columns[i].second] = true;
    SchemaProfile out;
    for (std::size_t ti = 0; ti < profile.tables.size(); ++ti) {
      const auto& t = profile.tables[ti];
      TableProfile nt;
      nt.name = t.name;
      nt.primary_key = t.primary_key;
      nt.foreign_keys = t.foreign_keys;
      for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
        if (k[ti][ci]) nt.columns.push_back(t.columns[ci]);
      }
      if (!nt.columns.empty()) out.tables.push_back(std::move(nt));
    }
    out.rendered = render(out);
    return out;
  };

  std::size_t extras = optional_columns.size();
  SchemaProfile result = build(extras);
  while (extras > 0 && result.rendered.size() > policy.budget) result = build(--extras);
  return result;
}

std::vector<std::pair<std::string, std::vector<std::string>>> parse_schema_headers(const std::string& rendered) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::size_t pos = 0;
  bool in_table = false;
  while (pos < rendered.size()) {
    auto eol = rendered.find('\n', pos);
    if (eol == std::string::npos) eol = rendered.size();
    const std::string line = rendered.substr(pos, eol - pos);
    pos = eol + 1;
    if (!in_table) {
      constexpr std::string_view kPrefix = "CREATE TABLE ";
      if (line.rfind(kPrefix, 0) == 0 && line.size() > kPrefix.size() + 2 && line.substr(line.size() - 2) == " (") {
        out.emplace_back(line.substr(kPrefix.size(), line.size() - kPrefix.size() - 2), std::vector<std::string>{});
        in_table = true;
      }
      continue;
    }
    if (line == ");") {
      in_table = false;
      continue;
    }
    if (line.rfind("PRIMARY KEY(", 0) == 0 || line.rfind("FOREIGN KEY(", 0) == 0) continue;
    auto cut = line.find("  ");
    if (cut == std::string::npos) cut = line.find(',');
    out.back().second.push_back(line.substr(0, cut));
  }
  return out;
}

nlohmann::json profile_to_json(const SchemaProfile& profile) {
  using nlohmann::json;
  json tables = json::array();
  for (const auto& t : profile.tables) {
    json cols = json::array();
    for (const auto& c : t.columns) {
      json jc{{"name", c.name}, {"declared_type", c.declared_type}, {"is_pk", c.is_pk}};
      jc["fk_target"] = c.fk_target ? json{{"table", c.fk_target->table}, {"column", c.fk_target->column}} : json();
      if (const auto* n = std::get_if<NumericStats>(&c.stats)) {
        jc["stats"] = {{"kind", "numeric"}, {"min", cell_text(n->min)}, {"max", cell_text(n->max)}};
      } else if (const auto* s = std::get_if<TextStats>(&c.stats)) {
        jc["stats"] = {{"kind", "text"}, {"modes", s->modes}};
      } else {
        jc["stats"] = {{"kind", "none"}};
      }
      if (c.description) jc["description"] = *c.description;
      cols.push_back(std::move(jc));
    }
    json fks = json::array();
    for (const auto& fk : t.foreign_keys) {
      fks.push_back({{"columns", fk.columns}, {"ref_table", fk.ref_table}, {"ref_columns", fk.ref_columns}});
    }
    tables.push_back({{"name", t.name}, {"columns", std::move(cols)}, {"primary_key", t.primary_key},
                      {"foreign_keys", std::move(fks)}});
  }
  return json{{"tables", std::move(tables)}, {"rendered", profile.rendered}};
}

}  // namespace sqlgrade
