#pragma once

// Text-generation service contract used by the verbal pipeline and the
// zero-shot evaluator.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace sqlgrade {

struct GenRequest {
  std::string model;
  std::string prompt;  // sent as one user message
  double temperature = 1.0;
  int max_tokens = 4096;
  std::optional<std::uint64_t> seed;
};

enum class GenErrorKind {
  kTransport,  // connection failure, 5xx, 429: retryable
  kTimeout,    // per-call deadline exceeded: retryable
  kModel,      // 4xx or malformed response body: not retried
};

struct GenError {
  GenErrorKind kind = GenErrorKind::kTransport;
  std::string message;
};

struct GenResult {
  std::optional<std::string> text;
  std::optional<GenError> error;  // set iff text is absent

  bool ok() const { return text.has_value(); }
  static GenResult success(std::string t) { return {std::move(t), std::nullopt}; }
  static GenResult failure(GenErrorKind kind, std::string message) {
    return {std::nullopt, GenError{kind, std::move(message)}};
  }
};

/// Implementations must be safe to call from several threads and must
/// return within their own per-call deadline.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual GenResult generate(const GenRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;  // total calls per request, >= 1
  std::chrono::milliseconds initial_backoff{250};
  double backoff_multiplier = 2.0;
};

/// Calls generate until success, a non-retryable model error, or
/// max_attempts calls. `sleep` defaults to std::this_thread::sleep_for.
GenResult generate_with_retry(TextGenerator& client, const GenRequest& request, const RetryPolicy& policy,
                              const std::function<void(std::chrono::milliseconds)>& sleep = {});

}  // namespace sqlgrade
