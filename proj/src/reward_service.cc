#include "sqlgrade/reward_service.h"

#include <httplib.h>

#include "sqlgrade/grpo.h"
#include "sqlgrade/reward.h"

namespace sqlgrade {
using nlohmann::json;

struct RewardService::Server {
  httplib::Server http;
};

namespace {

ServiceResponse error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json parse_body(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (!j.is_object()) throw BadRequest("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON: ") + e.what());
  }
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) throw BadRequest(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw BadRequest(std::string("'") + key + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

template <typename Fn>
ServiceResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const BadRequest& e) {
    return error(400, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

}  // namespace

RewardService::RewardService(Dataset dataset, GoldenCache cache, const Sandbox& sandbox, RewardServiceConfig config)
    : dataset_(std::move(dataset)),
      cache_(std::move(cache)),
      sandbox_(sandbox),
      config_(std::move(config)),
      server_(std::make_unique<Server>()) {
  config_.eval.validate();
  // httplib defaults to SO_REUSEPORT, which would let a second service
  // share the port silently. SO_REUSEADDR still allows quick restarts.
  server_->http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->http.new_task_queue = [n = config_.server_threads] { return new httplib::ThreadPool(n); };
  server_->http.Post("/reward", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_reward(req.body));
  });
  server_->http.Post("/reward/batch", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_reward_batch(req.body));
  });
  server_->http.Post("/grpo/advantages", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_advantages(req.body));
  });
  server_->http.Get("/healthz",
                    [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, handle_health()); });
}

RewardService::~RewardService() { stop(); }

ServiceResponse RewardService::score(const json& item) const {
  if (!item.is_object()) throw BadRequest("each item must be an object");
  if (!item.contains("sample_id") || !(item["sample_id"].is_string() || item["sample_id"].is_number_integer())) {
    throw BadRequest("'sample_id' must be a string");
  }
  const std::string id = item["sample_id"].is_string() ? item["sample_id"].get<std::string>()
                                                        : std::to_string(item["sample_id"].get<std::int64_t>());
  if (!item.contains("candidates") || !item["candidates"].is_array()) throw BadRequest("'candidates' must be an array");
  std::vector<std::string> candidates;
  for (const auto& c : item["candidates"]) {
    if (!c.is_string()) throw BadRequest("'candidates' must contain SQL strings");
    candidates.push_back(c.get<std::string>());
  }
  const Sample* sample = dataset_.find(id);
  if (!sample) return error(404, "unknown sample_id '" + id + "'");
  if (!cache_.find_valid(sample->db_id, sample->question_id, sample->gold_sql)) {
    return error(404, "no golden result cached for sample '" + id + "'");
  }
  const auto rewards = reward_batch(candidates, sample->db_id, sample->question_id, dataset_.database(sample->db_id),
                                    cache_, sandbox_, config_.eval, config_.workers_per_request);
  json values = json::array(), branches = json::array(), ex_f = json::array();
  for (const auto& r : rewards) {
    values.push_back(r.value);
    branches.push_back(std::string(to_string(r.branch)));
    ex_f.push_back(r.ex_f);
  }
  return {200, json{{"sample_id", id}, {"rewards", values}, {"branches", branches}, {"ex_f", ex_f}}};
}

ServiceResponse RewardService::handle_reward(const std::string& body) const {
  return guarded([&] {
    auto r = score(parse_body(body));
    if (r.status == 200) r.body.erase("sample_id");
    return r;
  });
}

ServiceResponse RewardService::handle_reward_batch(const std::string& body) const {
  return guarded([&] {
    const auto j = parse_body(body);
    if (!j.contains("items") || !j["items"].is_array()) throw BadRequest("'items' must be an array");
    json results = json::array();
    for (const auto& item : j["items"]) {
      auto r = score(item);
      if (r.status != 200) return r;
      results.push_back(std::move(r.body));
    }
    return ServiceResponse{200, json{{"results", std::move(results)}}};
  });
}

ServiceResponse RewardService::handle_advantages(const std::string& body) const {
  return guarded([&] {
    const auto j = parse_body(body);
    const auto rewards = number_list(j, "rewards");
    GrpoConfig cfg;
    cfg.advantage_std_floor = j.value("floor", cfg.advantage_std_floor);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.validate();
    json out{{"advantages", advantages(rewards, cfg.advantage_std_floor)}};
    if (j.contains("ratios")) {
      GrpoBatch batch{rewards, number_list(j, "ratios"), j.value("kl", 0.0)};
      out["objective"] = grpo_objective(batch, cfg);
    }
    return ServiceResponse{200, std::move(out)};
  });
}

ServiceResponse RewardService::handle_health() const {
  return {200, json{{"status", "ok"}, {"samples", dataset_.samples.size()}, {"cached", cache_.size()}}};
}

int RewardService::bind() {
  int port = config_.port;
  if (port == 0) {
    port = server_->http.bind_to_any_port(config_.host);
  } else if (!server_->http.bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port) +
                             " (address in use?)");
  }
  return port;
}

void RewardService::run() { server_->http.listen_after_bind(); }

void RewardService::stop() {
  if (server_) server_->http.stop();
}

}  // namespace sqlgrade
