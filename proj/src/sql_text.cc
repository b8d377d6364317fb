#include "sqlgrade/sql_text.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace sqlgrade {
namespace {

const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> kSet = {
      "abort", "action", "add", "after", "all", "alter", "always", "analyze", "and", "as", "asc", "attach",
      "autoincrement", "before", "begin", "between", "by", "cascade", "case", "cast", "check", "collate",
      "column", "commit", "conflict", "constraint", "create", "cross", "current", "current_date",
      "current_time", "current_timestamp", "database", "default", "deferrable", "deferred", "delete", "desc",
      "detach", "distinct", "do", "drop", "each", "else", "end", "escape", "except", "exclude", "exclusive",
      "exists", "explain", "fail", "filter", "first", "following", "for", "foreign", "from", "full",
      "generated", "glob", "group", "groups", "having", "if", "ignore", "ilike", "immediate", "in", "index",
      "indexed", "initially", "inner", "insert", "instead", "intersect", "interval", "into", "is", "isnull",
      "join", "key", "last", "left", "like", "limit", "match", "materialized", "merge", "natural", "no",
      "not", "nothing", "notnull", "null", "nulls", "of", "offset", "on", "or", "order", "others", "outer",
      "over", "partition", "plan", "pragma", "preceding", "primary", "query", "raise", "range", "recursive",
      "references", "regexp", "reindex", "release", "rename", "replace", "restrict", "returning", "right",
      "rollback", "row", "rows", "savepoint", "select", "set", "table", "temp", "temporary", "then", "ties",
      "to", "top", "transaction", "trigger", "truncate", "unbounded", "union", "unique", "update", "using",
      "vacuum", "values", "view", "virtual", "when", "where", "window", "with", "without", "true", "false",
      "grant", "revoke", "upsert", "use", "show", "describe", "call", "lock", "unlock"};
  return kSet;
}

const std::unordered_set<std::string>& builtin_functions() {
  static const std::unordered_set<std::string> kSet = {
      "abs", "avg", "char", "coalesce", "concat", "count", "date", "datetime", "group_concat", "hex",
      "ifnull", "iif", "instr", "julianday", "length", "lower", "ltrim", "max", "min", "nullif", "printf",
      "round", "rtrim", "strftime", "substr", "substring", "sum", "time", "total", "trim", "typeof", "upper",
      "row_number", "rank", "dense_rank", "lag", "lead", "ntile", "first_value", "last_value", "nth_value",
      "percent_rank", "cume_dist", "cast", "floor", "ceil", "ceiling", "power", "sqrt", "mod", "year",
      "month", "day", "now", "date_format", "datediff", "str_to_date", "extract", "format", "unixepoch"};
  return kSet;
}

const std::unordered_set<std::string>& mutation_leaders() {
  static const std::unordered_set<std::string> kSet = {
      "insert", "update", "delete", "drop", "create", "alter", "replace", "attach", "detach", "vacuum",
      "reindex", "pragma", "truncate", "grant", "revoke", "merge", "upsert", "begin", "commit", "rollback",
      "savepoint", "release", "analyze", "rename", "lock", "unlock", "call", "use", "set"};
  return kSet;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (c & 0x80); }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || (c & 0x80);
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_sql_keyword(std::string_view word) { return keywords().count(ascii_lower(word)) > 0; }

std::vector<SqlToken> tokenize_sql(std::string_view sql) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  bool space = false;
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      space = true;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto end = sql.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
      space = true;
      continue;
    }
    SqlToken tok{SqlTokenKind::kPunct, {}, space};
    space = false;
    if (c == '\'') {
      std::size_t j = i + 1;
      while (j < n) {
        if (sql[j] == '\'') {
          if (j + 1 < n && sql[j + 1] == '\'') {
            j += 2;
            continue;
          }
          ++j;
          break;
        }
        ++j;
      }
      tok.kind = SqlTokenKind::kString;
      tok.text = std::string(sql.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::size_t j = i + 1;
      std::string name;
      while (j < n) {
        if (sql[j] == close) {
          if (close != ']' && j + 1 < n && sql[j + 1] == close) {
            name.push_back(close);
            j += 2;
            continue;
          }
          ++j;
          break;
        }
        name.push_back(sql[j]);
        ++j;
      }
      tok.kind = SqlTokenKind::kQuotedIdent;
      tok.text = std::move(name);
      i = j;
    } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(sql[i + 1]))) {
      std::size_t j = i;
      while (j < n && (is_digit(sql[j]) || sql[j] == '.')) ++j;
      if (j < n && (sql[j] == 'e' || sql[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (sql[k] == '+' || sql[k] == '-')) ++k;
        if (k < n && is_digit(sql[k])) {
          j = k;
          while (j < n && is_digit(sql[j])) ++j;
        }
      }
      // Identifier characters glued onto a number (0x1F, 1abc) stay in it.
      while (j < n && is_ident_char(sql[j])) ++j;
      tok.kind = SqlTokenKind::kNumber;
      tok.text = std::string(sql.substr(i, j - i));
      i = j;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < n && is_ident_char(sql[j])) ++j;
      tok.kind = SqlTokenKind::kWord;
      tok.text = std::string(sql.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::array<std::string_view, 8> kTwoChar = {"<=", ">=", "<>", "!=", "==", "||", "<<", ">>"};
      std::size_t len = 1;
      for (auto op : kTwoChar) {
        if (sql.substr(i, 2) == op) {
          len = 2;
          break;
        }
      }
      tok.text = std::string(sql.substr(i, len));
      i += len;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::string normalize_sql(std::string_view sql) {
  auto tokens = tokenize_sql(sql);
  while (!tokens.empty() && tokens.back().kind == SqlTokenKind::kPunct && tokens.back().text == ";") {
    tokens.pop_back();
  }
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && t.space_before) out.push_back(' ');
    switch (t.kind) {
      case SqlTokenKind::kWord: {
        const auto lower = ascii_lower(t.text);
        if (keywords().count(lower) || builtin_functions().count(lower)) {
          out += lower;
        } else {
          out += t.text;
        }
        break;
      }
      case SqlTokenKind::kQuotedIdent: {
        out.push_back('"');
        for (char c : t.text) {
          out.push_back(c);
          if (c == '"') out.push_back('"');
        }
        out.push_back('"');
        break;
      }
      default:
        out += t.text;
    }
  }
  return out;
}

std::vector<std::string> identifier_tokens(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.kind == SqlTokenKind::kQuotedIdent) {
      out.push_back(t.text);
    } else if (t.kind == SqlTokenKind::kWord) {
      const auto lower = ascii_lower(t.text);
      if (keywords().count(lower)) continue;
      const bool is_call = i + 1 < tokens.size() && tokens[i + 1].kind == SqlTokenKind::kPunct &&
                           tokens[i + 1].text == "(";
      if (is_call && builtin_functions().count(lower)) continue;
      out.push_back(t.text);
    }
  }
  return out;
}

std::vector<QualifiedRef> qualified_references(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  std::vector<QualifiedRef> out;
  auto is_name = [](const SqlToken& t) {
    return t.kind == SqlTokenKind::kWord || t.kind == SqlTokenKind::kQuotedIdent;
  };
  for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
    if (!is_name(tokens[i]) || tokens[i + 1].kind != SqlTokenKind::kPunct || tokens[i + 1].text != ".") continue;
    // Skip the middle of a three-part name (schema.table.column): only the
    // last two parts form the reference.
    if (i >= 2 && tokens[i - 1].kind == SqlTokenKind::kPunct && tokens[i - 1].text == "." && is_name(tokens[i - 2])) {
      continue;
    }
    std::size_t q = i;
    std::size_t name = i + 2;
    if (name + 2 < tokens.size() && is_name(tokens[name]) && tokens[name + 1].kind == SqlTokenKind::kPunct &&
        tokens[name + 1].text == "." && is_name(tokens[name + 2])) {
      q = name;
      name = name + 2;
    }
    const auto& nt = tokens[name];
    if (is_name(nt)) {
      out.push_back({tokens[q].text, nt.text});
    } else if (nt.kind == SqlTokenKind::kPunct && nt.text == "*") {
      out.push_back({tokens[q].text, "*"});
    }
  }
  return out;
}

StatementClass classify_statement(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  // Split on top-level semicolons; trailing empty statements are fine.
  std::vector<std::vector<const SqlToken*>> statements(1);
  int depth = 0;
  for (const auto& t : tokens) {
    if (t.kind == SqlTokenKind::kPunct) {
      if (t.text == "(") ++depth;
      if (t.text == ")") depth = std::max(0, depth - 1);
      if (t.text == ";" && depth == 0) {
        statements.emplace_back();
        continue;
      }
    }
    statements.back().push_back(&t);
  }
  std::erase_if(statements, [](const auto& s) { return s.empty(); });
  if (statements.empty()) return StatementClass::kEmpty;
  if (statements.size() > 1) return StatementClass::kMultiple;

  const auto& st = statements.front();
  std::size_t first = 0;
  while (first < st.size() && st[first]->kind == SqlTokenKind::kPunct && st[first]->text == "(") ++first;
  if (first == st.size() || st[first]->kind != SqlTokenKind::kWord) return StatementClass::kUnknown;
  const auto lead = ascii_lower(st[first]->text);
  if (mutation_leaders().count(lead)) return StatementClass::kMutation;
  if (lead == "with") {
    // A CTE can front a DML statement: WITH x AS (...) DELETE FROM ...
    depth = 0;
    for (std::size_t i = first + 1; i < st.size(); ++i) {
      const auto* t = st[i];
      if (t->kind == SqlTokenKind::kPunct) {
        if (t->text == "(") ++depth;
        if (t->text == ")") depth = std::max(0, depth - 1);
        continue;
      }
      if (depth != 0 || t->kind != SqlTokenKind::kWord) continue;
      const auto w = ascii_lower(t->text);
      const bool followed_by_paren =
          i + 1 < st.size() && st[i + 1]->kind == SqlTokenKind::kPunct && st[i + 1]->text == "(";
      if (w == "insert" || w == "update" || w == "delete" || (w == "replace" && !followed_by_paren)) {
        return StatementClass::kMutation;
      }
    }
    return StatementClass::kRead;
  }
  if (lead == "select" || lead == "values" || lead == "explain") return StatementClass::kRead;
  return StatementClass::kUnknown;
}

std::string strip_think_blocks(std::string_view model_output) {
  std::string text;
  text.reserve(model_output.size());
  std::size_t pos = 0;
  while (pos < model_output.size()) {
    const auto open = model_output.find("<think>", pos);
    if (open == std::string_view::npos) {
      text.append(model_output.substr(pos));
      break;
    }
    text.append(model_output.substr(pos, open - pos));
    const auto close = model_output.find("</think>", open);
    if (close == std::string_view::npos) break;  // unterminated think block swallows the rest
    pos = close + 8;
  }
  return text;
}

std::optional<std::string> extract_sql(std::string_view model_output) {
  const std::string text = strip_think_blocks(model_output);

  static const std::unordered_set<std::string> kTags = {"sql", "sqlite", "mysql", "postgresql", "postgres"};
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string::npos) break;
    const auto line_end = text.find('\n', open + 3);
    if (line_end == std::string::npos) break;
    std::string tag = ascii_lower(std::string_view(text).substr(open + 3, line_end - open - 3));
    while (!tag.empty() && std::isspace(static_cast<unsigned char>(tag.back()))) tag.pop_back();
    const auto close = text.find("```", line_end + 1);
    if (close == std::string::npos) break;
    if (kTags.count(tag)) {
      std::string body = text.substr(line_end + 1, close - line_end - 1);
      const auto b = body.find_first_not_of(" \t\r\n");
      const auto e = body.find_last_not_of(" \t\r\n");
      if (b != std::string::npos) {
        last = body.substr(b, e - b + 1);
      }
    }
    pos = close + 3;
  }
  return last;
}

}  // namespace sqlgrade
