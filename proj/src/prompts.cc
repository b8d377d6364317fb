#include "sqlgrade/prompts.h"

#include <stdexcept>

namespace sqlgrade {
namespace {

constexpr const char* kGenerationIntro =
    "Task Overview:\n"
    "\n"
    "You are a powerful text-to-SQL model. Below, you are provided with a database schema and a natural "
    "language question. Your task is to understand the schema and generate a valid SQL query to answer the "
    "question.\n"
    "\n";

constexpr const char* kScoringIntroHead =
    "Task Overview:\n"
    "\n"
    "You are a scoring machine to make scores for ";

constexpr const char* kScoringIntroTail =
    " SQL scripts, based on understanding from input DATABASE SCHEMA, CONTEXT and QUESTION.\n"
    "\n";

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void require(const PromptFields& f) {
  if (f.dialect.empty()) throw std::invalid_argument("prompt field 'dialect' is required");
  if (f.schema.empty()) throw std::invalid_argument("prompt field 'schema' is required");
  if (f.question.empty()) throw std::invalid_argument("prompt field 'question' is required");
}

std::string input_sections(const PromptFields& f) {
  std::string s;
  s += "Database Engine:\n" + f.dialect + "\n";
  s += "Database Schema:\n" + trim_trailing_newlines(f.schema) + "\n";
  s += "Context:\n" + f.context + "\n";
  s += "Question:\n" + f.question + "\n";
  s += "\n";
  return s;
}

}  // namespace

std::string generation_prompt(const PromptFields& f) {
  require(f);
  std::string s = kGenerationIntro;
  s += input_sections(f);
  s += "Instructions:\n";
  s += "- Please use the minimum number of tokens required to provide a SQL statement and use sql functions for " +
       f.dialect + " database.\n";
  s += "- Make sure you only output the information that is asked in the question. If the question asks for a "
       "specific column, make sure to only include that column in the SELECT clause, nothing more.\n";
  s += "- The generated query should return all of the information asked in the question without any missing or "
       "extra information.\n";
  s += "- Please think through the steps of how to write the query with minimum number of tokens.\n";
  s += "\n";
  s += "Output Format:\n";
  s += "In your answer, please enclose the thinking block with less than 1600 tokens followed by a code block with "
       "the generated SQL code:\n";
  s += "<think>\n-- Your brief thinking\n</think>\n```sql\n-- Your SQL query\n```\n";
  s += "\n";
  s += "Please DO NOT generate any explanation to the final SQL code solution.";
  return s;
}

std::string scoring_prompt(const PromptFields& f, const std::vector<std::string>& sqls) {
  require(f);
  if (sqls.empty()) throw std::invalid_argument("scoring prompt needs at least one SQL script");
  std::string s = kScoringIntroHead;
  s += std::to_string(sqls.size());
  s += kScoringIntroTail;
  s += input_sections(f);
  s += "Instructions for scoring SQL scripts:\n";
  s += "- Based on your understanding from input DATABASE SCHEMA, CONTEXT and QUESTION, please give score for "
       "each SQL script.\n";
  s += "- Please compare all SQL scripts and give high score for SQL script that fully answers the input "
       "QUESTION.\n";
  s += "- Please think through the steps with minimum number of tokens and the score should be between 0 and 1.\n";
  s += "\n";
  for (std::size_t i = 0; i < sqls.size(); ++i) {
    if (i > 0) s += "\n";
    s += "SQL " + std::to_string(i + 1) + ":\n" + trim_trailing_newlines(sqls[i]) + "\n";
  }
  s += "\n";
  s += "Output Format:\n";
  s += "In your answer, please enclose the thinking block with less than 1600 tokens followed by a code block with "
       "scores for each SQL script:\n";
  s += "<think>\n-- Your brief thinking\n</think>\n<scores>\n{scores}\n</scores>\n";
  s += "\n";
  s += "Please DO NOT generate any explanation to the final scores.";
  return s;
}

std::string assemble_prompt(PromptKind kind, const PromptFields& fields, const std::vector<std::string>& sqls) {
  return kind == PromptKind::kGenerate ? generation_prompt(fields) : scoring_prompt(fields, sqls);
}

}  // namespace sqlgrade
