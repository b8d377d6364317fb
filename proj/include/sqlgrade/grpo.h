#pragma once

// Group-relative advantages, the clipped surrogate objective with a KL
// penalty, and the token-level KL estimator. Policies never appear here:
// only rewards, likelihood ratios and per-token log-probabilities do.

#include <vector>

namespace sqlgrade {

struct GrpoConfig {
  double epsilon = 0.2;  // clip range
  double beta = 0.0;     // KL weight
  double advantage_std_floor = 1e-6;

  /// Throws std::invalid_argument unless epsilon > 0, beta >= 0 and
  /// advantage_std_floor > 0. epsilon may be +infinity (no clipping).
  void validate() const;
};

struct GrpoBatch {
  std::vector<double> rewards;  // one per rollout
  std::vector<double> ratios;   // pi_theta / pi_old per rollout, > 0
  double kl = 0.0;              // KL estimate, >= 0
};

/// A_i = (R_i - mean(R)) / (std_pop(R) + floor). Throws
/// std::invalid_argument for an empty group or non-finite rewards.
std::vector<double> advantages(const std::vector<double>& rewards, double floor = 1e-6);

/// (1/G) sum_i min(r_i A_i, clip(r_i, 1 - eps, 1 + eps) A_i) - beta * kl with
/// A computed from the batch rewards. Throws std::invalid_argument on a
/// non-positive ratio, mismatched lengths, an empty batch or negative kl.
double grpo_objective(const GrpoBatch& batch, const GrpoConfig& cfg);

/// Same objective with caller-supplied advantages.
double grpo_objective(const std::vector<double>& advantages, const std::vector<double>& ratios, double kl,
                      const GrpoConfig& cfg);

/// mean over tokens of exp(d) - d - 1 with d = logp_ref - logp_policy.
/// Throws std::invalid_argument on empty or mismatched inputs.
double kl_penalty(const std::vector<double>& logp_policy, const std::vector<double>& logp_ref);

}  // namespace sqlgrade
