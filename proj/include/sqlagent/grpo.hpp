#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlagent/core.hpp"

namespace sqlagent {

/// One sampled group: a reward and per-token log-probabilities per sample.
struct GroupSample {
  std::vector<double> rewards;
  std::vector<std::vector<double>> logprobs_new;
  std::vector<std::vector<double>> logprobs_old;
  std::optional<std::vector<std::vector<double>>> logprobs_ref;

  /// Throws ConfigError on ragged or mismatched shapes.
  void validate() const;
};

struct GrpoConfig {
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double std_floor = 1e-6;
  double log_ratio_clamp = 20.0;

  void validate() const;
};

/// (r - mean) / max(population std, std_floor). Throws DegenerateGroup for
/// fewer than two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor = 1e-6);

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A), rho = exp(lp_new - lp_old)
/// with the log-ratio clamped to +-log_ratio_clamp.
double token_surrogate(double lp_new, double lp_old, double advantage, double eps,
                       double log_ratio_clamp = 20.0);

/// k3 estimator: exp(lp_ref - lp) - (lp_ref - lp) - 1.
double kl_term(double lp_policy, double lp_ref);

/// Token mode: (1/G) sum_i sum_t token_surrogate, no KL.
/// Sequence mode: one surrogate per sample on summed log-probabilities,
/// averaged over the group, minus beta times the group mean of summed
/// per-token KL when reference log-probabilities are present.
double grpo_objective(const GroupSample& group, const GrpoConfig& cfg, bool token_level);

struct TrainingRecord {
  std::string task_id;
  std::string group_id;
  std::size_t candidate_index = 0;
  std::string transcript;
  double reward = 0.0;
  double advantage = 0.0;

  bool operator==(const TrainingRecord&) const = default;
};

/// One record per candidate; rewards and advantages are aligned with
/// sets[i].candidates. Throws ConfigError on misalignment.
std::vector<TrainingRecord> export_training_records(const std::vector<CandidateSet>& sets,
                                                    const std::vector<std::vector<double>>& rewards,
                                                    const std::vector<std::vector<double>>& advantages);

std::string training_records_to_jsonl(const std::vector<TrainingRecord>& records);
std::vector<TrainingRecord> training_records_from_jsonl(std::string_view text);

}  // namespace sqlagent
