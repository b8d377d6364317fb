#include "sqlgrade/grpo.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sqlgrade {

void GrpoConfig::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be a finite value >= 0");
  if (!(advantage_std_floor > 0) || !std::isfinite(advantage_std_floor)) {
    throw std::invalid_argument("advantage_std_floor must be a finite value > 0");
  }
}

std::vector<double> advantages(const std::vector<double>& rewards, double floor) {
  if (rewards.empty()) throw std::invalid_argument("advantages of an empty group");
  if (!(floor > 0) || !std::isfinite(floor)) throw std::invalid_argument("advantage std floor must be > 0");
  const double g = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("non-finite reward");
    sum += r;
  }
  // Two-pass mean: the correction term recovers most of the rounding error
  // of the first pass, so the centred values sum to ~0.
  double mean = sum / g;
  double correction = 0.0;
  for (double r : rewards) correction += r - mean;
  mean += correction / g;

  std::vector<double> dev(rewards.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    dev[i] = rewards[i] - mean;
    sq += dev[i] * dev[i];
  }
  const double denom = std::sqrt(sq / g) + floor;
  for (auto& d : dev) d /= denom;
  return dev;
}

double grpo_objective(const std::vector<double>& adv, const std::vector<double>& ratios, double kl,
                      const GrpoConfig& cfg) {
  cfg.validate();
  if (adv.empty()) throw std::invalid_argument("empty GRPO batch");
  if (adv.size() != ratios.size()) {
    throw std::invalid_argument("advantage count " + std::to_string(adv.size()) + " differs from ratio count " +
                                std::to_string(ratios.size()));
  }
  if (!(kl >= 0) || !std::isfinite(kl)) throw std::invalid_argument("kl must be a finite value >= 0");
  const double lo = 1.0 - cfg.epsilon;
  const double hi = 1.0 + cfg.epsilon;
  double sum = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    const double r = ratios[i];
    if (!(r > 0) || !std::isfinite(r)) throw std::invalid_argument("likelihood ratios must be finite and > 0");
    const double clipped = std::min(std::max(r, lo), hi);
    sum += std::min(r * adv[i], clipped * adv[i]);
  }
  const double value = sum / static_cast<double>(adv.size());
  return value - cfg.beta * kl;
}

double grpo_objective(const GrpoBatch& batch, const GrpoConfig& cfg) {
  cfg.validate();
  if (batch.rewards.size() != batch.ratios.size()) {
    throw std::invalid_argument("rewards and ratios must have equal length");
  }
  return grpo_objective(advantages(batch.rewards, cfg.advantage_std_floor), batch.ratios, batch.kl, cfg);
}

double kl_penalty(const std::vector<double>& logp_policy, const std::vector<double>& logp_ref) {
  if (logp_policy.empty()) throw std::invalid_argument("kl_penalty of an empty sequence");
  if (logp_policy.size() != logp_ref.size()) throw std::invalid_argument("kl_penalty length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_policy.size(); ++i) {
    const double d = logp_ref[i] - logp_policy[i];
    if (!std::isfinite(d)) throw std::invalid_argument("non-finite log-probability");
    // expm1 keeps precision for small d; the clamp guards the last ulp.
    sum += std::max(0.0, std::expm1(d) - d);
  }
  return sum / static_cast<double>(logp_policy.size());
}

}  // namespace sqlgrade
