#pragma once

// HTTP reward service for external trainers.
//
//   POST /reward            {"sample_id", "candidates": [sql, ...]}
//                           -> {"rewards", "branches", "ex_f"}
//   POST /reward/batch      {"items": [{"sample_id", "candidates"}, ...]}
//                           -> {"results": [{"sample_id", "rewards", "branches", "ex_f"}, ...]}
//   POST /grpo/advantages   {"rewards", "floor"?, "ratios"?, "kl"?, "epsilon"?, "beta"?}
//                           -> {"advantages", "objective"?}
//   GET  /healthz           -> {"status": "ok", "samples", "cached"}
//
// Errors are {"error": text} with 400 for malformed requests and 404 for
// unknown samples.

#include <memory>
#include <string>

#include <json.hpp>

#include "sqlgrade/dataset.h"
#include "sqlgrade/golden_cache.h"
#include "sqlgrade/metrics.h"
#include "sqlgrade/sandbox.h"

namespace sqlgrade {

struct RewardServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  EvalConfig eval;
  std::size_t workers_per_request = 4;
  std::size_t server_threads = 8;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class RewardService {
 public:
  RewardService(Dataset dataset, GoldenCache cache, const Sandbox& sandbox, RewardServiceConfig config);
  ~RewardService();
  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // Request handlers, usable without a socket.
  ServiceResponse handle_reward(const std::string& body) const;
  ServiceResponse handle_reward_batch(const std::string& body) const;
  ServiceResponse handle_advantages(const std::string& body) const;
  ServiceResponse handle_health() const;

  /// Binds the listening socket and returns the bound port. Throws
  /// std::runtime_error when the address is in use.
  int bind();
  /// Serves until stop(); requires bind().
  void run();
  /// Thread-safe; makes run() return.
  void stop();

 private:
  ServiceResponse score(const nlohmann::json& item) const;

  Dataset dataset_;
  GoldenCache cache_;
  const Sandbox& sandbox_;
  RewardServiceConfig config_;
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace sqlgrade
