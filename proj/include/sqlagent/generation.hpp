#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "sqlagent/core.hpp"
#include "sqlagent/policy_client.hpp"
#include "sqlagent/sqlgate.hpp"

namespace sqlagent {

struct EpisodeConfig {
  int max_turns = 5;
  std::size_t row_cap = kObservationRowCap;
  SamplingParams sampling{0.8, 0.7, 50, 0};
  int max_new_tokens = 1024;
  /// Transcript size (bytes over all messages) past which the episode ends
  /// with protocol_error instead of silently dropping context.
  std::size_t max_context_chars = 200'000;
  std::chrono::milliseconds query_timeout{30'000};

  /// Throws ConfigError.
  void validate() const;
};

/// Schema description used in the generation prompt: one table block per
/// table, blank-line separated.
std::string render_schema(const Schema& schema);

/// The generation prompt. A gold hint, when given, is shown as a reference
/// query the agent may use to steer its exploration.
std::string build_generation_prompt(const Task& task, const Schema& schema,
                                    const std::optional<std::string>& gold_hint = std::nullopt);

inline constexpr std::string_view kLastTurnNotice =
    "You have only 1 turn left. You MUST directly provide the final SQL query solution inside "
    "<solution>...</solution>.";

struct Episode {
  Trajectory trajectory;
  Transcript transcript;  // everything sent to and received from the policy
};

/// Think-Act-Observe loop for one candidate. The seed in cfg.sampling is
/// used as is. PolicyUnavailable and BackendContract propagate.
Episode run_episode_full(const Task& task, const Schema& schema, PolicyClient& policy, const Database& db,
                         const EpisodeConfig& cfg, std::size_t candidate_index = 0,
                         const std::optional<std::string>& gold_hint = std::nullopt);

Trajectory run_episode(const Task& task, const Schema& schema, PolicyClient& policy, const Database& db,
                       const EpisodeConfig& cfg, std::size_t candidate_index = 0);

/// n episodes; candidate i samples with seed base + i (base defaults to 0).
/// Each worker opens its own connection to `db_path`. The first failing
/// candidate's error propagates and no partial set is returned.
CandidateSet rollout_group(const Task& task, const Schema& schema, PolicyClient& policy,
                           const std::filesystem::path& db_path, const EpisodeConfig& cfg, std::size_t n,
                           std::size_t workers = 1);

/// Executed gold query plus whether comparison against it is ordered.
struct GoldReference {
  ExecutionResult result;
  bool order_sensitive = false;
};

/// Throws GoldExecutionFailure when the gold query errors.
GoldReference make_gold_reference(const std::string& gold_sql, const Database& db);

/// -1 when there is no solution or it errors, 1 when its result equals the
/// gold result, 0 otherwise.
double score_solution(const std::optional<std::string>& solution_sql, const GoldReference& gold,
                      const Database& db);

double gen_reward(const Trajectory& trajectory, const std::string& gold_sql, const Database& db);

}  // namespace sqlagent
