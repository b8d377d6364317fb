#pragma once

// Generation and scoring prompt templates.

#include <string>
#include <vector>

namespace sqlgrade {

enum class PromptKind { kGenerate, kScore };

struct PromptFields {
  std::string dialect;
  std::string schema;
  std::string context;  // may be empty; the Context section is always emitted
  std::string question;
};

/// Throws std::invalid_argument when dialect, schema or question is empty.
std::string generation_prompt(const PromptFields& fields);

/// Candidates are listed as "SQL 1:", "SQL 2:", ... in input order. Throws
/// std::invalid_argument when `sqls` is empty or a required field is empty.
std::string scoring_prompt(const PromptFields& fields, const std::vector<std::string>& sqls);

std::string assemble_prompt(PromptKind kind, const PromptFields& fields, const std::vector<std::string>& sqls = {});

}  // namespace sqlgrade
