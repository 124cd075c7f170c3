#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqlagent/core.hpp"
#include "sqlagent/policy_client.hpp"
#include "sqlagent/sqlgate.hpp"

namespace sqlagent {

struct VerifierScore {
  std::vector<double> per_round;
  double mean = 0.0;
};

/// Verifier prompt for one candidate; the solution section is the whole
/// trajectory in tag form.
std::string build_verifier_prompt(const Task& task, const Trajectory& trajectory);

/// Probability mass of first tokens that read "yes" once leading whitespace
/// is dropped and case folded.
double yes_probability(const TokenDistribution& distribution);

/// m single-token scoring calls with seeds base + round (base defaults to
/// 0). A backend that returns no distribution scores the round 1 or 0 from
/// the verdict text.
VerifierScore score_trajectory(PolicyClient& policy, const Task& task, const Trajectory& trajectory, int m,
                               const SamplingParams& sampling);

/// Argmax of the means, lowest index on ties. Throws NoCandidates when empty.
std::size_t select_best(const std::vector<VerifierScore>& scores);
std::size_t select_best(const std::vector<double>& means);

/// Majority vote over execution results. Erroring candidates (and those
/// without a solution) only win when nothing else succeeded, in which case
/// index 0 is returned.
std::size_t self_consistency_select(const CandidateSet& candidates, const Database& db);

/// Candidate block list shown to the judge: reasoning, SQL and the
/// execution observation of each candidate.
std::string format_judge_candidates(const CandidateSet& candidates, const Database& db);
std::string build_judge_prompt(const Task& task, const CandidateSet& candidates, const Database& db);

/// First integer in the reply if it indexes a candidate.
std::optional<std::size_t> parse_judge_index(std::string_view reply, std::size_t n);

struct JudgeOutcome {
  std::size_t index = 0;
  std::string reply;
  std::optional<std::string> diagnostic;  // set when falling back to 0
};

JudgeOutcome llm_judge_select(const Task& task, const CandidateSet& candidates, PolicyClient& judge,
                              const Database& db, const SamplingParams& sampling);

// ---------------------------------------------------------------------------
// Verifier SFT data

enum class PairLabel { Yes, No };
enum class PairSource { generator, base_model, gold_hinted };

std::string_view to_string(PairLabel label);
std::string_view to_string(PairSource source);

struct SftPair {
  std::string task_id;
  std::string prompt;
  PairLabel label = PairLabel::No;
  PairSource source = PairSource::generator;

  bool operator==(const SftPair&) const = default;
};

/// Produces a trajectory for a task with the gold query offered as a hint.
using HintedGenerator = std::function<std::optional<Trajectory>(const Task& task, const std::string& gold_sql)>;
using DatabaseResolver = std::function<std::filesystem::path(const std::string& db_id)>;

struct VerifierDatasetStats {
  std::size_t tasks = 0;
  std::size_t both_classes = 0;
  std::size_t only_correct = 0;
  std::size_t hinted = 0;
  std::size_t hint_failures = 0;
  std::size_t skipped = 0;  // gold query failed to execute
};

/// Per task: pools both candidate sources and scores them against the gold
/// query. With both classes present the best correct candidate (fewest
/// turns, then shortest rendering, then lowest index) and the worst
/// incorrect one (lowest reward, then most turns, then longest) give one
/// Yes and one No pair, emitted in an order drawn from `seed`. With only
/// correct candidates a single Yes pair is emitted. With only incorrect
/// ones `hinted` is asked for a trajectory; if it solves the task it
/// supplies the Yes pair.
/// Throws NoCandidates when a task has no candidates at all.
std::vector<SftPair> build_verifier_dataset(const std::vector<Task>& tasks,
                                            const std::map<std::string, CandidateSet>& generator_sets,
                                            const std::map<std::string, CandidateSet>& base_sets,
                                            const DatabaseResolver& dbs, std::uint64_t seed,
                                            const HintedGenerator& hinted, VerifierDatasetStats* stats = nullptr);

/// {task_id, prompt, completion, source} per line.
std::string sft_pairs_to_jsonl(const std::vector<SftPair>& pairs);

}  // namespace sqlagent
