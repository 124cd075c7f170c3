// Command-line front end: pipeline stages, metrics and training-data export.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sqlagent/datasets.hpp"
#include "sqlagent/desk_fixture.hpp"
#include "sqlagent/harness.hpp"

namespace fs = std::filesystem;
using namespace sqlagent;

namespace {

struct Options {
  PipelineConfig pipeline;
  std::string exclusions;
  std::string selection = "verifier";
  std::vector<std::string> compare;
  std::int64_t seed = 0;
  std::string log_level = "info";
  GrpoConfig grpo;
  long timeout_ms = 120'000;
  long backoff_ms = 200;

  std::string predictions;
  std::string base_backend;
  std::size_t vd_candidates = 16;
  std::uint64_t vd_seed = 0;
  std::string fixture_dir = "desk";
};

void add_pipeline_options(CLI::App& app, Options& o) {
  auto& p = o.pipeline;
  app.add_option("--tasks", p.tasks_path, "Benchmark task file (JSON array)");
  app.add_option("--db-root", p.db_root, "Directory holding <db_id>/<db_id>.sqlite");
  app.add_option("--out", p.output_dir, "Artifact directory")->capture_default_str();
  app.add_option("--exclusions", o.exclusions, "Newline-delimited task ids to skip");

  app.add_option("--backend", p.backend, "Policy backend: mock:<script.json> or http URL");
  app.add_option("--verifier-backend", p.verifier_backend, "Verifier backend (defaults to --backend)");
  app.add_option("--judge-backend", p.judge_backend, "Judge backend (defaults to --backend)");
  app.add_option("--api-key", p.remote.api_key, "Bearer token for http backends");
  app.add_option("--max-attempts", p.remote.max_attempts, "Attempts per backend request")->capture_default_str();
  app.add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->capture_default_str();
  app.add_option("--timeout-ms", o.timeout_ms, "Backend request timeout")->capture_default_str();
  app.add_option("--max-in-flight", p.remote.max_in_flight, "Concurrent backend requests")->capture_default_str();
  app.add_option("--top-logprobs", p.remote.top_logprobs, "Top-n log-probabilities requested for scoring")
      ->capture_default_str();

  app.add_option("--grounding", p.grounding, "Run the grounding stage (false routes the full schema)")
      ->capture_default_str();
  app.add_option("--grounding-temperature", p.grounding_sampling.temperature)->capture_default_str();
  app.add_option("--grounding-top-p", p.grounding_sampling.top_p)->capture_default_str();

  app.add_option("--candidates", p.candidates, "Trajectories per question")->capture_default_str();
  app.add_option("--max-turns", p.episode.max_turns, "Interaction turns per episode")->capture_default_str();
  app.add_option("--row-cap", p.episode.row_cap, "Rows shown in an observation")->capture_default_str();
  app.add_option("--max-new-tokens", p.episode.max_new_tokens)->capture_default_str();
  app.add_option("--max-context-chars", p.episode.max_context_chars)->capture_default_str();
  app.add_option("--temperature", p.episode.sampling.temperature)->capture_default_str();
  app.add_option("--top-p", p.episode.sampling.top_p)->capture_default_str();
  app.add_option("--top-k", p.episode.sampling.top_k)->capture_default_str();
  app.add_option("--seed", o.seed, "Base seed; candidate i uses seed + i")->capture_default_str();

  app.add_option("--verifier-rounds", p.verifier_rounds, "Scoring rounds per candidate")->capture_default_str();
  app.add_option("--verifier-temperature", p.verifier_sampling.temperature)->capture_default_str();
  app.add_option("--selection", o.selection, "verifier | self_consistency | llm_judge | first")
      ->capture_default_str();
  app.add_option("--compare", o.compare, "Extra strategies to report on the same candidates");
  app.add_option("--pass-at", p.pass_at, "n values for pass@n")->capture_default_str();
  app.add_option("--workers", p.workers, "Tasks processed concurrently")->capture_default_str();

  app.add_option("--clip-epsilon", o.grpo.clip_epsilon)->capture_default_str();
  app.add_option("--kl-beta", o.grpo.kl_beta)->capture_default_str();
  app.add_option("--std-floor", o.grpo.std_floor)->capture_default_str();

  app.add_option("--log-level", o.log_level, "trace | debug | info | warn | error")
      ->capture_default_str();
}

void finalise(Options& o) {
  auto& p = o.pipeline;
  if (!o.exclusions.empty()) p.exclusions = o.exclusions;
  p.selection = strategy_from_string(o.selection);
  p.compare.clear();
  for (const auto& s : o.compare) p.compare.push_back(strategy_from_string(s));
  p.episode.sampling.seed = o.seed;
  p.grounding_sampling.seed = o.seed;
  p.verifier_sampling.seed = o.seed;
  p.judge_sampling.seed = o.seed;
  p.remote.request_timeout = std::chrono::milliseconds(o.timeout_ms);
  p.remote.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
  spdlog::set_level(spdlog::level::from_str(o.log_level));
}

int run_stage(const Options& o, Stage stage) {
  const auto result = run_pipeline(o.pipeline, stage);
  for (const auto& f : result.failures)
    std::cerr << "failed: task " << f.task_id << " (" << f.stage << "): " << f.message << "\n";
  if (!result.report.is_null()) std::cout << result.report.dump(2) << "\n";
  return result.ok() ? 0 : 1;
}

int evaluate(const Options& o) {
  const auto& p = o.pipeline;
  const auto bench = load_benchmark(p.tasks_path, p.db_root);
  std::map<std::string, std::string> predicted;
  std::istringstream in(read_file(o.predictions));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    predicted[j.at("task_id").get<std::string>()] = j.at("sql").get<std::string>();
  }
  std::vector<EvalItem> items;
  for (const auto& t : bench.tasks) {
    if (!t.gold_sql) continue;
    std::optional<std::string> sql;
    if (auto it = predicted.find(t.task_id); it != predicted.end()) sql = it->second;
    items.push_back({sql, *t.gold_sql, database_path(p.db_root, t.db_id)});
  }
  std::cout << nlohmann::json{{"tasks", items.size()}, {"ex", evaluate_ex(items)}}.dump(2) << "\n";
  return 0;
}

int prepare_grpo_cmd(const Options& o) {
  const auto path = o.pipeline.output_dir / "candidates.jsonl";
  const auto sets = group_candidates(trajectories_from_jsonl(read_file(path)));
  const auto out = prepare_grpo(sets, o.grpo);
  write_file(o.pipeline.output_dir / "grpo.jsonl", training_records_to_jsonl(out.records));
  std::cout << nlohmann::json{{"records", out.records.size()}, {"degenerate_groups", out.degenerate_groups}}.dump(2)
            << "\n";
  return 0;
}

int verifier_dataset_cmd(const Options& o) {
  const auto& p = o.pipeline;
  if (p.backend.empty() || o.base_backend.empty())
    throw ConfigError("build-verifier-dataset needs --backend and --base-backend");
  auto generator = make_policy(p.backend, p.remote);
  auto base = make_policy(o.base_backend, p.remote);
  VerifierDataConfig vcfg;
  vcfg.candidates = o.vd_candidates;
  vcfg.seed = o.vd_seed;
  vcfg.workers = p.workers;
  vcfg.episode.max_turns = p.episode.max_turns;
  vcfg.episode.row_cap = p.episode.row_cap;
  vcfg.episode.sampling.seed = o.seed;
  VerifierDatasetStats stats;
  const auto pairs = run_verifier_dataset(p, vcfg, *generator, *base, &stats);
  fs::create_directories(p.output_dir);
  write_file(p.output_dir / "verifier_sft.jsonl", sft_pairs_to_jsonl(pairs));
  std::cout << nlohmann::json{{"pairs", pairs.size()},
                              {"tasks", stats.tasks},
                              {"both_classes", stats.both_classes},
                              {"only_correct", stats.only_correct},
                              {"gold_hinted", stats.hinted},
                              {"hint_failures", stats.hint_failures},
                              {"skipped", stats.skipped}}
                   .dump(2)
            << "\n";
  return 0;
}

int make_fixture_cmd(const Options& o) {
  const auto root = fs::absolute(o.fixture_dir);
  const auto fx = write_desk_fixture(root);
  const auto script = record_desk_script(fx);
  write_desk_config(fx, root / "config.toml", root / "out");
  std::cout << "fixture written to " << root.string() << "\n"
            << "  tasks:  " << fx.tasks_path.string() << "\n"
            << "  script: " << script.string() << "\n"
            << "  config: " << (root / "config.toml").string() << "\n";
  return 0;
}

// Environment overrides rank between the command line and the config file.
// CLI11 applies config values before environment values, so env settings are
// injected as arguments instead, skipping flags already given explicitly.
const std::pair<const char*, const char*> kEnvOptions[] = {
    {"SQLAGENT_TASKS", "--tasks"},
    {"SQLAGENT_DB_ROOT", "--db-root"},
    {"SQLAGENT_OUT", "--out"},
    {"SQLAGENT_BACKEND", "--backend"},
    {"SQLAGENT_VERIFIER_BACKEND", "--verifier-backend"},
    {"SQLAGENT_JUDGE_BACKEND", "--judge-backend"},
    {"SQLAGENT_API_KEY", "--api-key"},
    {"SQLAGENT_LOG_LEVEL", "--log-level"},
};

std::vector<std::string> with_env(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> injected;
  for (const auto& [env, flag] : kEnvOptions) {
    const char* value = std::getenv(env);
    if (value == nullptr || *value == '\0') continue;
    const std::string f = flag;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == f || a.rfind(f + "=", 0) == 0;
    });
    if (!given) injected.push_back(f + "=" + value);
  }
  injected.insert(injected.end(), args.begin(), args.end());
  std::reverse(injected.begin(), injected.end());
  return injected;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("sqlagent"));

  CLI::App app{"Three-agent text-to-SQL pipeline: grounding, multi-turn generation, verification"};
  app.set_config("--config", "", "TOML config file (keys are long option names)");
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Environment: SQLAGENT_TASKS, SQLAGENT_DB_ROOT, SQLAGENT_OUT, SQLAGENT_BACKEND,\n"
      "SQLAGENT_VERIFIER_BACKEND, SQLAGENT_JUDGE_BACKEND, SQLAGENT_API_KEY, SQLAGENT_LOG_LEVEL.\n"
      "Precedence: command line, then environment, then config file.");

  Options o;
  add_pipeline_options(app, o);

  auto* ground = app.add_subcommand("ground", "Per-table schema grounding");
  auto* generate = app.add_subcommand("generate", "Ground, then roll out candidate trajectories");
  auto* select = app.add_subcommand("select", "Ground, generate, then run the selection strategies");
  auto* report = app.add_subcommand("report", "Run every stage (resuming) and write report.json");
  auto* evaluate_app = app.add_subcommand("evaluate", "Execution accuracy of a predictions file");
  evaluate_app->add_option("--predictions", o.predictions, "JSONL lines {task_id, sql}")->required();
  auto* grpo_app = app.add_subcommand("prepare-grpo", "Group advantages and training records from candidates");
  auto* vd_app = app.add_subcommand("build-verifier-dataset", "Curate verifier SFT pairs");
  vd_app->add_option("--base-backend", o.base_backend, "Backend of the untrained base policy")->required();
  vd_app->add_option("--vd-candidates", o.vd_candidates, "Candidates per policy and task")->capture_default_str();
  vd_app->add_option("--vd-seed", o.vd_seed, "Seed for pair ordering")->capture_default_str();
  auto* fixture_app = app.add_subcommand("make-fixture", "Write the desk benchmark, its replay script and config");
  fixture_app->add_option("--dir", o.fixture_dir, "Target directory")->capture_default_str();

  try {
    auto args = with_env(argc, argv);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    finalise(o);
    if (ground->parsed()) return run_stage(o, Stage::ground);
    if (generate->parsed()) return run_stage(o, Stage::generate);
    if (select->parsed()) return run_stage(o, Stage::select);
    if (report->parsed()) return run_stage(o, Stage::report);
    if (evaluate_app->parsed()) return evaluate(o);
    if (grpo_app->parsed()) return prepare_grpo_cmd(o);
    if (vd_app->parsed()) return verifier_dataset_cmd(o);
    if (fixture_app->parsed()) return make_fixture_cmd(o);
  } catch (const ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}
