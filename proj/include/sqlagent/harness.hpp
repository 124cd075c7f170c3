#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlagent/generation.hpp"
#include "sqlagent/grpo.hpp"
#include "sqlagent/policy_client.hpp"
#include "sqlagent/validation.hpp"

namespace sqlagent {

enum class Strategy { verifier, self_consistency, llm_judge, first };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct PipelineConfig {
  std::filesystem::path tasks_path;
  std::filesystem::path db_root;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> exclusions;

  /// Policy backends ("mock:<script>" or an http URL). Empty verifier/judge
  /// entries reuse `backend`.
  std::string backend;
  std::string verifier_backend;
  std::string judge_backend;
  RemotePolicyConfig remote;

  bool grounding = true;
  SamplingParams grounding_sampling{0.6, 0.95, -1, 0};
  int grounding_max_tokens = 1024;

  EpisodeConfig episode;
  std::size_t candidates = 8;

  int verifier_rounds = 4;
  SamplingParams verifier_sampling{0.7, 0.95, -1, 0};
  SamplingParams judge_sampling{0.0, 1.0, -1, 0};

  Strategy selection = Strategy::verifier;
  /// Further strategies evaluated on the same candidates for comparison.
  std::vector<Strategy> compare;
  std::vector<std::size_t> pass_at{1, 4, 8};

  std::size_t workers = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Non-owning handles; every stage that runs needs its backend set.
struct Backends {
  PolicyClient* grounder = nullptr;
  PolicyClient* generator = nullptr;
  PolicyClient* verifier = nullptr;
  PolicyClient* judge = nullptr;
};

enum class Stage { ground, generate, select, report };

struct TaskFailure {
  std::string task_id;
  std::string stage;
  std::string message;
};

struct PipelineResult {
  nlohmann::json report;  // empty unless the report stage ran
  std::vector<TaskFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// Runs ground -> generate -> select -> report up to `until`, persisting
/// each stage under output_dir:
///   grounding.jsonl, candidates.jsonl, selection_<strategy>.jsonl,
///   report.json, timing.json
/// Stages reuse whatever tasks the existing artifacts already cover, so an
/// interrupted run resumes. A failing task is recorded and skipped by later
/// stages; it never aborts the batch.
PipelineResult run_pipeline(const PipelineConfig& config, const Backends& backends, Stage until = Stage::report);

/// Same, with backends built from the config's backend strings.
PipelineResult run_pipeline(const PipelineConfig& config, Stage until = Stage::report);

// ---------------------------------------------------------------------------
// Metrics

struct EvalItem {
  std::optional<std::string> predicted;
  std::string gold;
  std::filesystem::path db;
};

/// Share of items whose prediction executes to the gold result. Missing or
/// erroring predictions count as wrong; so does an item whose gold fails.
double evaluate_ex(const std::vector<EvalItem>& items);

/// For each n, share of sets where one of the first n candidates has
/// reward 1. Sets smaller than n use all their candidates; an empty set
/// counts as a miss.
std::map<std::size_t, double> pass_at_n(const std::vector<CandidateSet>& sets, const std::vector<std::size_t>& ns);

// ---------------------------------------------------------------------------
// Training-data commands

struct GrpoExport {
  std::vector<TrainingRecord> records;
  std::size_t degenerate_groups = 0;  // groups with fewer than two candidates
};

/// Advantages per task group from scored candidates.
GrpoExport prepare_grpo(const std::vector<CandidateSet>& sets, const GrpoConfig& cfg);

struct VerifierDataConfig {
  std::size_t candidates = 16;
  EpisodeConfig episode{5, kObservationRowCap, SamplingParams{0.7, 0.9, 50, 0}};
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Rolls out both policies on every task of the benchmark and curates the
/// verifier pairs. The hinted fallback reuses the generator with the gold
/// query in its prompt.
std::vector<SftPair> run_verifier_dataset(const PipelineConfig& config, const VerifierDataConfig& vcfg,
                                          PolicyClient& generator, PolicyClient& base,
                                          VerifierDatasetStats* stats = nullptr);

/// Whole-file helpers used by the stages and the CLI.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace sqlagent
