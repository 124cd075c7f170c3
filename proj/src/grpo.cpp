#include "sqlagent/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sqlagent {

namespace {

bool same_shape(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != b[i].size()) return false;
  return true;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

void GroupSample::validate() const {
  if (logprobs_new.size() != rewards.size())
    throw ConfigError("group has " + std::to_string(rewards.size()) + " rewards but " +
                      std::to_string(logprobs_new.size()) + " samples");
  if (!same_shape(logprobs_new, logprobs_old)) throw ConfigError("new and old log-probabilities differ in shape");
  if (logprobs_ref && !same_shape(logprobs_new, *logprobs_ref))
    throw ConfigError("reference log-probabilities differ in shape");
}

void GrpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("clip_epsilon must be in (0, 1)");
  if (!(kl_beta >= 0.0)) throw ConfigError("kl_beta must be non-negative");
  if (!(std_floor > 0.0)) throw ConfigError("std_floor must be positive");
  if (!(log_ratio_clamp > 0.0)) throw ConfigError("log_ratio_clamp must be positive");
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor) {
  if (rewards.size() < 2) throw DegenerateGroup("advantages need at least two samples");
  const double n = static_cast<double>(rewards.size());
  const double mean = sum(rewards) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double scale = std::max(std::sqrt(var / n), std_floor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / scale);
  return out;
}

double token_surrogate(double lp_new, double lp_old, double advantage, double eps, double log_ratio_clamp) {
  const double rho = std::exp(std::clamp(lp_new - lp_old, -log_ratio_clamp, log_ratio_clamp));
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * advantage, clipped * advantage);
}

double kl_term(double lp_policy, double lp_ref) {
  const double d = lp_ref - lp_policy;
  return std::exp(d) - d - 1.0;
}

double grpo_objective(const GroupSample& group, const GrpoConfig& cfg, bool token_level) {
  cfg.validate();
  group.validate();
  const auto adv = group_advantages(group.rewards, cfg.std_floor);
  const double g = static_cast<double>(group.rewards.size());

  double total = 0.0;
  if (token_level) {
    for (std::size_t i = 0; i < adv.size(); ++i)
      for (std::size_t t = 0; t < group.logprobs_new[i].size(); ++t)
        total += token_surrogate(group.logprobs_new[i][t], group.logprobs_old[i][t], adv[i], cfg.clip_epsilon,
                                 cfg.log_ratio_clamp);
    return total / g;
  }

  for (std::size_t i = 0; i < adv.size(); ++i)
    total += token_surrogate(sum(group.logprobs_new[i]), sum(group.logprobs_old[i]), adv[i], cfg.clip_epsilon,
                             cfg.log_ratio_clamp);
  double kl = 0.0;
  if (group.logprobs_ref) {
    for (std::size_t i = 0; i < adv.size(); ++i)
      for (std::size_t t = 0; t < group.logprobs_new[i].size(); ++t)
        kl += kl_term(group.logprobs_new[i][t], (*group.logprobs_ref)[i][t]);
  }
  return total / g - cfg.kl_beta * kl / g;
}

std::vector<TrainingRecord> export_training_records(const std::vector<CandidateSet>& sets,
                                                    const std::vector<std::vector<double>>& rewards,
                                                    const std::vector<std::vector<double>>& advantages) {
  if (rewards.size() != sets.size() || advantages.size() != sets.size())
    throw ConfigError("training export inputs are not aligned with the candidate sets");
  std::vector<TrainingRecord> out;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    if (rewards[s].size() != set.candidates.size() || advantages[s].size() != set.candidates.size())
      throw ConfigError("training export: group " + set.task_id + " is misaligned");
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      const auto& c = set.candidates[i];
      out.push_back({set.task_id, set.task_id, c.candidate_index, render_trajectory(c), rewards[s][i],
                     advantages[s][i]});
    }
  }
  return out;
}

std::string training_records_to_jsonl(const std::vector<TrainingRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j{{"task_id", r.task_id},   {"group_id", r.group_id},   {"candidate_index", r.candidate_index},
                     {"transcript", r.transcript}, {"reward", r.reward}, {"advantage", r.advantage}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainingRecord> training_records_from_jsonl(std::string_view text) {
  std::vector<TrainingRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("task_id").get<std::string>(), j.at("group_id").get<std::string>(),
                     j.at("candidate_index").get<std::size_t>(), j.at("transcript").get<std::string>(),
                     j.at("reward").get<double>(), j.at("advantage").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord("training record line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sqlagent
