#pragma once

// Chat-completions client: POST {base_url}/chat/completions with
// {"model", "messages": [{"role": "user", "content": prompt}],
//  "temperature", "max_tokens", "seed"?}; the reply text is
// choices[0].message.content.

#include <chrono>
#include <string>

#include "sqlgrade/gen_client.h"

namespace sqlgrade {

struct HttpGenConfig {
  std::string base_url;  // e.g. https://host/v1
  std::string token;     // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{120'000};

  /// Reads SQLGRADE_GEN_URL, SQLGRADE_GEN_TOKEN and SQLGRADE_GEN_TIMEOUT
  /// (seconds). Throws std::runtime_error when the URL is unset.
  static HttpGenConfig from_env();
};

class HttpGenClient final : public TextGenerator {
 public:
  explicit HttpGenClient(HttpGenConfig config);
  GenResult generate(const GenRequest& request) override;

 private:
  HttpGenConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // base path ending without '/'
};

}  // namespace sqlgrade
