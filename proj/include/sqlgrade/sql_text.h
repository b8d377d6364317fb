#pragma once

// Lexical SQL helpers shared by the sandbox, dedup, schema subsetting and
// ingest filtering. None of this parses SQL; everything works on tokens.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlgrade {

enum class SqlTokenKind {
  kWord,         // bare identifier or keyword
  kQuotedIdent,  // "x", `x` or [x]; text holds the unquoted name
  kString,       // '...' literal; text holds the raw literal with quotes
  kNumber,
  kPunct,
};

struct SqlToken {
  SqlTokenKind kind;
  std::string text;
  bool space_before = false;  // whitespace or a comment preceded this token
};

/// Never fails: unterminated literals and quotes run to the end of input.
std::vector<SqlToken> tokenize_sql(std::string_view sql);

bool is_sql_keyword(std::string_view word);

/// Lowercases keywords outside literals, collapses whitespace, drops
/// comments and trailing semicolons. Used to deduplicate candidates.
std::string normalize_sql(std::string_view sql);

/// Identifier-like tokens (bare non-keyword words and quoted identifiers),
/// in order of appearance, duplicates kept.
std::vector<std::string> identifier_tokens(std::string_view sql);

/// A `qualifier.name` reference found in the text.
struct QualifiedRef {
  std::string qualifier;
  std::string name;  // "*" for qualifier.*
};
std::vector<QualifiedRef> qualified_references(std::string_view sql);

enum class StatementClass { kRead, kMutation, kMultiple, kEmpty, kUnknown };

/// Lexical statement-class detection used before execution in read-only
/// mode. kUnknown statements are left to the engine (that is where syntax
/// errors are reported).
StatementClass classify_statement(std::string_view sql);

/// Removes <think>...</think> spans; an unterminated block runs to the end.
std::string strip_think_blocks(std::string_view model_output);

/// Contents of the last fenced sql code block after removing think blocks.
std::optional<std::string> extract_sql(std::string_view model_output);

/// ASCII lowercase copy.
std::string ascii_lower(std::string_view s);

}  // namespace sqlgrade
