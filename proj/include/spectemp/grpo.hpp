#pragma once

#include <string>
#include <vector>

#include "spectemp/common.hpp"

namespace spectemp {

// One recorded rollout: joint target+draft sequence log-likelihoods under
// the new, old, and reference policies, plus its scalar reward.
struct Rollout {
  std::string group;
  double reward = 0.0;
  double logp_new_target = 0.0;
  double logp_old_target = 0.0;
  double logp_new_draft = 0.0;
  double logp_old_draft = 0.0;
  double logp_ref_target = 0.0;
  double logp_ref_draft = 0.0;
};

struct GrpoConfig {
  double beta = 0.04;      // KL penalty coefficient
  double clip_eps = 0.2;
  double std_floor = 1e-6;
  double max_ratio = 1e6;  // overflow clamp for the joint ratio
};

// A_i = (r_i - mean) / max(population_std, std_floor); G >= 2 required.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     double std_floor = 1e-6);

struct RatioResult {
  double value = 1.0;
  bool clamped = false;  // warning flag: overflow clamped to max_ratio
};

// exp((logp_new_target + logp_new_draft) - (logp_old_target + logp_old_draft))
RatioResult joint_ratio(const Rollout& r, double max_ratio = 1e6);

// Nonnegative per-rollout KL estimate k(l) = exp(l) - l - 1 with
// l = logp_ref_joint - logp_new_joint.
double kl_estimate(const Rollout& r);

// Mean over groups of (1/G) sum_i [min(ratio*A, clip(ratio)*A) - beta*k_i].
// Rollouts are partitioned by group id; each group needs size >= 2.
double grpo_objective(const std::vector<Rollout>& rollouts, const GrpoConfig& cfg);

struct SlopeCheck {
  int analytic_sign = 0;     // sign of the unclipped-arm derivative
  double numeric_slope = 0.0;
  double analytic_slope = 0.0;
};

// Centered finite difference of the objective in logp_new_target of one
// rollout. With beta=0 and the rollout unclipped, the slope sign matches
// the advantage sign.
SlopeCheck finite_diff_check(const std::vector<Rollout>& rollouts, const GrpoConfig& cfg,
                             std::size_t index, double delta = 1e-5);

// Line-delimited rollout records (JSONL): group id, reward, six log-probs.
std::string rollout_to_json(const Rollout& r);
Rollout rollout_from_json(const std::string& line);
std::vector<Rollout> load_rollouts(const std::string& path);
void save_rollouts(const std::string& path, const std::vector<Rollout>& rollouts);

}  // namespace spectemp
