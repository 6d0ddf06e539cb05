#include "spectemp/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace spectemp {

using nlohmann::json;

std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor) {
  if (rewards.size() < 2)
    throw GroupTooSmall("group_advantages: need at least 2 rollouts, got " +
                        std::to_string(rewards.size()));
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());  // population variance
  double denom = std::max(std::sqrt(var), std_floor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

RatioResult joint_ratio(const Rollout& r, double max_ratio) {
  double log_ratio = (r.logp_new_target + r.logp_new_draft) -
                     (r.logp_old_target + r.logp_old_draft);
  if (!std::isfinite(log_ratio)) throw GroupError("joint_ratio: non-finite log-probs");
  RatioResult out;
  double v = std::exp(log_ratio);
  if (!(v <= max_ratio)) {
    out.value = max_ratio;
    out.clamped = true;
  } else {
    out.value = v;
  }
  return out;
}

double kl_estimate(const Rollout& r) {
  double l = (r.logp_ref_target + r.logp_ref_draft) -
             (r.logp_new_target + r.logp_new_draft);
  return std::exp(l) - l - 1.0;
}

namespace {

// groups in order of first appearance
std::vector<std::vector<std::size_t>> partition_groups(const std::vector<Rollout>& rollouts) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    auto [it, inserted] = index.try_emplace(rollouts[i].group, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  for (const auto& g : groups)
    if (g.size() < 2)
      throw GroupError("grpo: group '" + rollouts[g.front()].group + "' has size " +
                       std::to_string(g.size()) + " (< 2)");
  return groups;
}

}  // namespace

double grpo_objective(const std::vector<Rollout>& rollouts, const GrpoConfig& cfg) {
  if (rollouts.empty()) throw GroupError("grpo_objective: no rollouts");
  auto groups = partition_groups(rollouts);
  double obj = 0.0;
  for (const auto& g : groups) {
    std::vector<double> rewards;
    rewards.reserve(g.size());
    for (std::size_t i : g) rewards.push_back(rollouts[i].reward);
    std::vector<double> adv = group_advantages(rewards, cfg.std_floor);
    double group_term = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Rollout& r = rollouts[g[k]];
      double ratio = joint_ratio(r, cfg.max_ratio).value;
      double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      double surrogate = std::min(ratio * adv[k], clipped * adv[k]);
      group_term += surrogate - cfg.beta * kl_estimate(r);
    }
    obj += group_term / static_cast<double>(g.size());
  }
  return obj / static_cast<double>(groups.size());
}

SlopeCheck finite_diff_check(const std::vector<Rollout>& rollouts, const GrpoConfig& cfg,
                             std::size_t index, double delta) {
  if (index >= rollouts.size()) throw GroupError("finite_diff_check: index out of range");
  std::vector<Rollout> plus = rollouts;
  std::vector<Rollout> minus = rollouts;
  plus[index].logp_new_target += delta;
  minus[index].logp_new_target -= delta;
  SlopeCheck out;
  out.numeric_slope =
      (grpo_objective(plus, cfg) - grpo_objective(minus, cfg)) / (2.0 * delta);

  // analytic derivative at the unperturbed point
  auto groups = partition_groups(rollouts);
  for (const auto& g : groups) {
    auto it = std::find(g.begin(), g.end(), index);
    if (it == g.end()) continue;
    std::vector<double> rewards;
    for (std::size_t i : g) rewards.push_back(rollouts[i].reward);
    std::vector<double> adv = group_advantages(rewards, cfg.std_floor);
    double a = adv[static_cast<std::size_t>(it - g.begin())];
    const Rollout& r = rollouts[index];
    double ratio = joint_ratio(r, cfg.max_ratio).value;
    bool unclipped = ratio >= 1.0 - cfg.clip_eps && ratio <= 1.0 + cfg.clip_eps;
    // min() selects the moving (unclipped) arm also when it is the smaller one
    bool moving_arm = unclipped ||
                      ratio * a < std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    double surrogate_d = moving_arm ? ratio * a : 0.0;
    double l = (r.logp_ref_target + r.logp_ref_draft) -
               (r.logp_new_target + r.logp_new_draft);
    double kl_d = 1.0 - std::exp(l);  // d/d(logp_new) of exp(l)-l-1
    double scale = 1.0 / (static_cast<double>(g.size()) * static_cast<double>(groups.size()));
    out.analytic_slope = scale * (surrogate_d - cfg.beta * kl_d);
    break;
  }
  out.analytic_sign = out.analytic_slope > 0.0 ? 1 : (out.analytic_slope < 0.0 ? -1 : 0);
  return out;
}

std::string rollout_to_json(const Rollout& r) {
  json j;
  j["group"] = r.group;
  j["reward"] = r.reward;
  j["logp_new_target"] = r.logp_new_target;
  j["logp_old_target"] = r.logp_old_target;
  j["logp_new_draft"] = r.logp_new_draft;
  j["logp_old_draft"] = r.logp_old_draft;
  j["logp_ref_target"] = r.logp_ref_target;
  j["logp_ref_draft"] = r.logp_ref_draft;
  return j.dump();
}

Rollout rollout_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("rollout record: ") + e.what());
  }
  Rollout r;
  try {
    r.group = j.at("group").get<std::string>();
    r.reward = j.at("reward").get<double>();
    r.logp_new_target = j.at("logp_new_target").get<double>();
    r.logp_old_target = j.at("logp_old_target").get<double>();
    r.logp_new_draft = j.at("logp_new_draft").get<double>();
    r.logp_old_draft = j.at("logp_old_draft").get<double>();
    r.logp_ref_target = j.at("logp_ref_target").get<double>();
    r.logp_ref_draft = j.at("logp_ref_draft").get<double>();
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("rollout record: ") + e.what());
  }
  return r;
}

std::vector<Rollout> load_rollouts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::vector<Rollout> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(rollout_from_json(line));
  }
  return out;
}

void save_rollouts(const std::string& path, const std::vector<Rollout>& rollouts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for write: " + path);
  for (const Rollout& r : rollouts) out << rollout_to_json(r) << '\n';
}

}  // namespace spectemp
