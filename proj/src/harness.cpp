#include "sqlagent/harness.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "sqlagent/datasets.hpp"
#include "sqlagent/grounding.hpp"
#include "sqlagent/parallel.hpp"

namespace sqlagent {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::verifier: return "verifier";
    case Strategy::self_consistency: return "self_consistency";
    case Strategy::llm_judge: return "llm_judge";
    case Strategy::first: return "first";
  }
  return "verifier";
}

Strategy strategy_from_string(std::string_view s) {
  for (auto v : {Strategy::verifier, Strategy::self_consistency, Strategy::llm_judge, Strategy::first})
    if (s == to_string(v)) return v;
  throw ConfigError("unknown selection strategy '" + std::string(s) +
                    "' (expected verifier, self_consistency, llm_judge or first)");
}

void PipelineConfig::validate() const {
  if (tasks_path.empty()) throw ConfigError("tasks path is not set");
  if (db_root.empty()) throw ConfigError("database root is not set");
  if (output_dir.empty()) throw ConfigError("output directory is not set");
  if (candidates < 1) throw ConfigError("candidates must be at least 1");
  if (verifier_rounds < 1) throw ConfigError("verifier rounds must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (grounding_max_tokens < 1) throw ConfigError("grounding max tokens must be at least 1");
  for (auto n : pass_at)
    if (n < 1) throw ConfigError("pass@n needs n >= 1");
  episode.validate();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Metrics

double evaluate_ex(const std::vector<EvalItem>& items) {
  if (items.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& item : items) {
    if (!item.predicted) continue;
    try {
      Database db(item.db);
      const auto gold = make_gold_reference(item.gold, db);
      if (score_solution(item.predicted, gold, db) == 1.0) ++correct;
    } catch (const Error& e) {
      spdlog::warn("evaluation item on {} counted wrong: {}", item.db.string(), e.what());
    }
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

std::map<std::size_t, double> pass_at_n(const std::vector<CandidateSet>& sets, const std::vector<std::size_t>& ns) {
  std::map<std::size_t, double> out;
  for (auto n : ns) {
    if (sets.empty()) {
      out[n] = 0.0;
      continue;
    }
    std::size_t hits = 0;
    for (const auto& set : sets) {
      const auto limit = std::min(n, set.candidates.size());
      for (std::size_t i = 0; i < limit; ++i) {
        if (set.candidates[i].reward == 1.0) {
          ++hits;
          break;
        }
      }
    }
    out[n] = static_cast<double>(hits) / static_cast<double>(sets.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

struct GroundRecord {
  std::string table;
  GroundingDecision decision;
  std::optional<GoldSchemaLabel> gold;
  std::optional<double> reward;
};

json ground_record_json(const std::string& task_id, const GroundRecord& r) {
  return json{{"task_id", task_id},
              {"table", r.table},
              {"decision", to_string(r.decision.decision)},
              {"columns", r.decision.columns},
              {"valid_format", r.decision.valid_format},
              {"reward", r.reward ? json(*r.reward) : json(nullptr)},
              {"gold", r.gold ? json{{"relevant", r.gold->relevant},
                                     {"columns", std::vector<std::string>(r.gold->gold_columns.begin(),
                                                                          r.gold->gold_columns.end())}}
                              : json(nullptr)}};
}

GroundRecord ground_record_from(const json& j) {
  GroundRecord r;
  r.table = j.at("table").get<std::string>();
  r.decision.decision = j.at("decision").get<std::string>() == "Y" ? Decision::Y : Decision::N;
  r.decision.columns = j.at("columns").get<std::vector<std::string>>();
  r.decision.valid_format = j.at("valid_format").get<bool>();
  if (!j.at("reward").is_null()) r.reward = j.at("reward").get<double>();
  if (!j.at("gold").is_null()) {
    const auto cols = j.at("gold").at("columns").get<std::vector<std::string>>();
    r.gold = GoldSchemaLabel{r.table, j.at("gold").at("relevant").get<bool>(), {cols.begin(), cols.end()}};
  }
  return r;
}

struct SelectionRecord {
  std::size_t index = 0;
  std::optional<std::vector<double>> scores;
  std::optional<std::vector<std::vector<double>>> per_round;
  std::optional<std::string> diagnostic;
};

json selection_json(const std::string& task_id, Strategy s, const SelectionRecord& r) {
  return json{{"task_id", task_id},
              {"strategy", to_string(s)},
              {"selected_index", r.index},
              {"scores", r.scores ? json(*r.scores) : json(nullptr)},
              {"per_round", r.per_round ? json(*r.per_round) : json(nullptr)},
              {"diagnostic", r.diagnostic ? json(*r.diagnostic) : json(nullptr)}};
}

SelectionRecord selection_from(const json& j) {
  SelectionRecord r;
  r.index = j.at("selected_index").get<std::size_t>();
  if (!j.at("scores").is_null()) r.scores = j.at("scores").get<std::vector<double>>();
  if (!j.at("per_round").is_null()) r.per_round = j.at("per_round").get<std::vector<std::vector<double>>>();
  if (!j.at("diagnostic").is_null()) r.diagnostic = j.at("diagnostic").get<std::string>();
  return r;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw MalformedRecord(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

class Timer {
 public:
  explicit Timer(json& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    sink_[name_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  json& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

PolicyClient& require(PolicyClient* p, const char* what) {
  if (!p) throw ConfigError(std::string("no ") + what + " backend configured");
  return *p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult run_pipeline(const PipelineConfig& config, const Backends& backends, Stage until) {
  config.validate();
  fs::create_directories(config.output_dir);
  json timing = json::object();
  const auto started = std::chrono::steady_clock::now();

  const auto excluded = config.exclusions ? load_exclusion_list(*config.exclusions) : std::set<std::string>{};
  const auto bench = load_benchmark(config.tasks_path, config.db_root, excluded);
  for (const auto& d : bench.diagnostics) spdlog::warn("{}", d);
  const auto& tasks = bench.tasks;
  const auto n_tasks = tasks.size();
  spdlog::info("loaded {} tasks from {}", n_tasks, config.tasks_path.string());

  std::vector<std::optional<TaskFailure>> failure(n_tasks);
  std::mutex log_mu;
  auto fail = [&](std::size_t i, const char* stage, const std::string& message) {
    std::lock_guard lock(log_mu);
    spdlog::error("task {} failed in {}: {}", tasks[i].task_id, stage, message);
    failure[i] = TaskFailure{tasks[i].task_id, stage, message};
  };
  auto db_of = [&](std::size_t i) { return database_path(config.db_root, tasks[i].db_id); };

  std::map<std::string, Schema> schemas;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const auto& db_id = tasks[i].db_id;
    if (schemas.contains(db_id)) continue;
    try {
      Database db(db_of(i));
      schemas.emplace(db_id, introspect_schema(db, db_id));
    } catch (const Error& e) {
      fail(i, "load", e.what());
    }
  }
  for (std::size_t i = 0; i < n_tasks; ++i)
    if (!failure[i] && !schemas.contains(tasks[i].db_id)) fail(i, "load", "schema unavailable");

  auto finish = [&](json report) {
    PipelineResult result;
    result.report = std::move(report);
    for (auto& f : failure)
      if (f) result.failures.push_back(*f);
    return result;
  };

  // Ground ------------------------------------------------------------------
  std::vector<std::optional<std::vector<GroundRecord>>> grounding(n_tasks);
  std::vector<Schema> working(n_tasks);
  std::size_t fallbacks = 0;
  {
    Timer t(timing, "ground");
    const auto path = config.output_dir / "grounding.jsonl";
    if (config.grounding) {
      std::map<std::string, std::vector<GroundRecord>> prior;
      for (const auto& j : read_jsonl(path)) prior[j.at("task_id").get<std::string>()].push_back(ground_record_from(j));

      std::vector<std::size_t> todo;
      for (std::size_t i = 0; i < n_tasks; ++i) {
        if (failure[i]) continue;
        const auto& schema = schemas.at(tasks[i].db_id);
        if (auto it = prior.find(tasks[i].task_id); it != prior.end() && it->second.size() == schema.tables.size()) {
          bool aligned = true;
          for (std::size_t k = 0; k < schema.tables.size(); ++k)
            aligned = aligned && it->second[k].table == schema.tables[k].name;
          if (aligned) {
            grounding[i] = std::move(it->second);
            continue;
          }
        }
        todo.push_back(i);
      }
      spdlog::info("grounding: {} tasks to run, {} reused", todo.size(), n_tasks - todo.size());
      if (!todo.empty()) require(backends.grounder, "grounding");

      parallel_for(todo.size(), config.workers, [&](std::size_t k) {
          const auto i = todo[k];
          const auto& task = tasks[i];
          const auto& schema = schemas.at(task.db_id);
          try {
            std::optional<std::vector<GoldSchemaLabel>> labels;
            if (task.gold_sql) {
              try {
                labels = extract_gold_schema(*task.gold_sql, schema);
              } catch (const ParseFailure& e) {
                spdlog::warn("task {}: gold query not analysable, grounding unscored: {}", task.task_id, e.what());
              }
            }
            std::vector<GroundRecord> records;
            for (std::size_t ti = 0; ti < schema.tables.size(); ++ti) {
              const auto& table = schema.tables[ti];
              CompletionRequest req{{{Role::user, build_grounding_prompt(task, table)}},
                                    config.grounding_sampling,
                                    config.grounding_max_tokens,
                                    false};
              GroundRecord r{table.name, parse_grounding_answer(backends.grounder->complete(req).text), {}, {}};
              if (labels) {
                r.gold = (*labels)[ti];
                r.reward = ground_reward(r.decision, *r.gold);
              }
              records.push_back(std::move(r));
            }
            grounding[i] = std::move(records);
          } catch (const Error& e) {
            fail(i, "ground", e.what());
          }
        });

      std::string out;
      for (std::size_t i = 0; i < n_tasks; ++i)
        if (grounding[i])
          for (const auto& r : *grounding[i]) out += ground_record_json(tasks[i].task_id, r).dump() + "\n";
      write_file(path, out);
    }

    for (std::size_t i = 0; i < n_tasks; ++i) {
      if (failure[i]) continue;
      const auto& schema = schemas.at(tasks[i].db_id);
      if (!grounding[i]) {
        working[i] = schema;
        continue;
      }
      std::map<std::string, GroundingDecision> decisions;
      for (const auto& r : *grounding[i]) decisions[r.table] = r.decision;
      try {
        working[i] = assemble_reduced_schema(schema, decisions).as_schema(schema.db_id);
      } catch (const EmptySchema&) {
        spdlog::info("task {}: grounding kept no table, using the full schema", tasks[i].task_id);
        working[i] = schema;
        ++fallbacks;
      }
    }
  }
  if (until == Stage::ground) return finish({});

  // Generate ----------------------------------------------------------------
  std::vector<std::optional<CandidateSet>> sets(n_tasks);
  {
    Timer t(timing, "generate");
    const auto path = config.output_dir / "candidates.jsonl";
    std::map<std::string, CandidateSet> prior;
    if (fs::exists(path))
      for (auto& set : group_candidates(trajectories_from_jsonl(read_file(path)))) prior[set.task_id] = std::move(set);

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < n_tasks; ++i) {
      if (failure[i]) continue;
      if (auto it = prior.find(tasks[i].task_id); it != prior.end() && it->second.candidates.size() == config.candidates) {
        bool complete = true;
        for (std::size_t k = 0; k < config.candidates; ++k)
          complete = complete && it->second.candidates[k].candidate_index == k;
        if (complete) {
          sets[i] = std::move(it->second);
          continue;
        }
      }
      todo.push_back(i);
    }
    spdlog::info("generation: {} tasks to run, {} reused", todo.size(), n_tasks - todo.size());
    if (!todo.empty()) require(backends.generator, "generation");

    parallel_for(todo.size(), config.workers, [&](std::size_t k) {
      const auto i = todo[k];
      const auto& task = tasks[i];
      try {
        auto set = rollout_group(task, working[i], *backends.generator, db_of(i), config.episode, config.candidates);
        if (task.gold_sql) {
          Database db(db_of(i));
          const auto gold = make_gold_reference(*task.gold_sql, db);
          for (auto& c : set.candidates) c.reward = score_solution(c.solution_sql, gold, db);
        }
        sets[i] = std::move(set);
      } catch (const Error& e) {
        fail(i, "generate", e.what());
      }
    });

    std::string out;
    for (std::size_t i = 0; i < n_tasks; ++i)
      if (sets[i] && !failure[i]) out += trajectories_to_jsonl(sets[i]->candidates);
    write_file(path, out);
  }
  if (until == Stage::generate) return finish({});

  // Select ------------------------------------------------------------------
  std::vector<Strategy> strategies{config.selection};
  for (auto s : config.compare)
    if (std::find(strategies.begin(), strategies.end(), s) == strategies.end()) strategies.push_back(s);

  std::map<Strategy, std::vector<std::optional<SelectionRecord>>> selections;
  {
    Timer t(timing, "select");
    for (auto strategy : strategies) {
      auto& chosen = selections[strategy];
      chosen.resize(n_tasks);
      const auto path = config.output_dir / ("selection_" + std::string(to_string(strategy)) + ".jsonl");
      std::map<std::string, SelectionRecord> prior;
      for (const auto& j : read_jsonl(path)) prior[j.at("task_id").get<std::string>()] = selection_from(j);

      std::vector<std::size_t> todo;
      for (std::size_t i = 0; i < n_tasks; ++i) {
        if (failure[i] || !sets[i]) continue;
        if (auto it = prior.find(tasks[i].task_id); it != prior.end() && it->second.index < sets[i]->candidates.size()) {
          chosen[i] = it->second;
          continue;
        }
        todo.push_back(i);
      }
      spdlog::info("selection {}: {} tasks to run", to_string(strategy), todo.size());
      if (!todo.empty() && strategy == Strategy::verifier) require(backends.verifier, "verifier");
      if (!todo.empty() && strategy == Strategy::llm_judge) require(backends.judge, "judge");

      parallel_for(todo.size(), config.workers, [&](std::size_t k) {
        const auto i = todo[k];
        const auto& task = tasks[i];
        const auto& set = *sets[i];
        try {
          SelectionRecord r;
          switch (strategy) {
            case Strategy::verifier: {
              std::vector<VerifierScore> scores;
              for (const auto& c : set.candidates)
                scores.push_back(score_trajectory(*backends.verifier, task, c, config.verifier_rounds,
                                                  config.verifier_sampling));
              r.index = select_best(scores);
              r.scores.emplace();
              r.per_round.emplace();
              for (auto& s : scores) {
                r.scores->push_back(s.mean);
                r.per_round->push_back(std::move(s.per_round));
              }
              break;
            }
            case Strategy::self_consistency: {
              Database db(db_of(i));
              r.index = self_consistency_select(set, db);
              break;
            }
            case Strategy::llm_judge: {
              Database db(db_of(i));
              auto outcome = llm_judge_select(task, set, *backends.judge, db, config.judge_sampling);
              r.index = outcome.index;
              r.diagnostic = std::move(outcome.diagnostic);
              break;
            }
            case Strategy::first:
              r.index = 0;
              break;
          }
          chosen[i] = std::move(r);
        } catch (const Error& e) {
          fail(i, "select", e.what());
        }
      });

      std::string out;
      for (std::size_t i = 0; i < n_tasks; ++i)
        if (chosen[i] && !failure[i]) out += selection_json(tasks[i].task_id, strategy, *chosen[i]).dump() + "\n";
      write_file(path, out);
    }
  }
  if (until == Stage::select) return finish({});

  // Report ------------------------------------------------------------------
  json report;
  {
    Timer t(timing, "report");
    std::vector<std::size_t> labelled;
    for (std::size_t i = 0; i < n_tasks; ++i)
      if (tasks[i].gold_sql) labelled.push_back(i);

    json failed = json::array();
    for (const auto& f : failure)
      if (f) failed.push_back({{"task_id", f->task_id}, {"stage", f->stage}, {"message", f->message}});

    json ground = {{"enabled", config.grounding}};
    if (config.grounding) {
      std::vector<QualifiedColumns> preds;
      std::vector<QualifiedColumns> golds;
      double reward_sum = 0.0;
      std::size_t reward_n = 0;
      std::size_t instances = 0;
      for (std::size_t i = 0; i < n_tasks; ++i) {
        if (!grounding[i]) continue;
        std::map<std::string, GroundingDecision> decisions;
        std::vector<GoldSchemaLabel> labels;
        bool scored = true;
        for (const auto& r : *grounding[i]) {
          ++instances;
          decisions[r.table] = r.decision;
          if (r.reward) {
            reward_sum += *r.reward;
            ++reward_n;
          }
          if (r.gold)
            labels.push_back(*r.gold);
          else
            scored = false;
        }
        if (!scored) continue;
        preds.push_back(predicted_columns(decisions));
        golds.push_back(gold_columns(labels));
      }
      const auto m = grounding_metrics(preds, golds);
      ground["instances"] = instances;
      ground["scored_tasks"] = preds.size();
      ground["recall"] = preds.empty() ? json(nullptr) : json(m.recall);
      ground["precision"] = preds.empty() ? json(nullptr) : json(m.precision);
      ground["mean_reward"] = reward_n ? json(reward_sum / static_cast<double>(reward_n)) : json(nullptr);
      ground["full_schema_fallbacks"] = fallbacks;
    }

    std::vector<CandidateSet> pools;
    std::map<std::string, std::size_t> terminations{{"solved", 0}, {"turn_limit", 0}, {"protocol_error", 0}};
    double gen_sum = 0.0;
    std::size_t gen_n = 0;
    for (auto i : labelled) {
      pools.push_back(sets[i] && !failure[i] ? *sets[i] : CandidateSet{tasks[i].task_id, {}, {}, {}});
    }
    for (std::size_t i = 0; i < n_tasks; ++i) {
      if (!sets[i] || failure[i]) continue;
      for (const auto& c : sets[i]->candidates) {
        ++terminations[std::string(to_string(c.termination))];
        if (c.reward) {
          gen_sum += *c.reward;
          ++gen_n;
        }
      }
    }
    json pass = json::object();
    for (const auto& [n, v] : pass_at_n(pools, config.pass_at)) pass[std::to_string(n)] = v;
    json gen = {{"candidates_per_task", config.candidates},
                {"max_turns", config.episode.max_turns},
                {"terminations", terminations},
                {"mean_reward", gen_n ? json(gen_sum / static_cast<double>(gen_n)) : json(nullptr)},
                {"pass_at", pass}};

    json per_strategy = json::object();
    for (auto strategy : strategies) {
      const auto& chosen = selections.at(strategy);
      std::vector<EvalItem> items;
      for (auto i : labelled) {
        std::optional<std::string> predicted;
        if (!failure[i] && sets[i] && chosen[i]) predicted = sets[i]->candidates[chosen[i]->index].solution_sql;
        items.push_back({predicted, *tasks[i].gold_sql, db_of(i)});
      }
      per_strategy[std::string(to_string(strategy))] = evaluate_ex(items);
    }

    report = {{"schema_version", 1},
              {"tasks", n_tasks},
              {"labelled_tasks", labelled.size()},
              {"failed_tasks", failed},
              {"grounding", ground},
              {"generation", gen},
              {"selection", {{"strategy", to_string(config.selection)},
                             {"ex", per_strategy.at(std::string(to_string(config.selection)))}}},
              {"strategies", per_strategy},
              {"ex", per_strategy.at(std::string(to_string(config.selection)))}};
    write_file(config.output_dir / "report.json", report.dump(2) + "\n");
  }
  timing["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file(config.output_dir / "timing.json", timing.dump(2) + "\n");
  return finish(std::move(report));
}

PipelineResult run_pipeline(const PipelineConfig& config, Stage until) {
  if (config.backend.empty()) throw ConfigError("no backend configured");
  auto main = make_policy(config.backend, config.remote);
  std::unique_ptr<PolicyClient> verifier;
  std::unique_ptr<PolicyClient> judge;
  if (!config.verifier_backend.empty() && config.verifier_backend != config.backend)
    verifier = make_policy(config.verifier_backend, config.remote);
  if (!config.judge_backend.empty() && config.judge_backend != config.backend)
    judge = make_policy(config.judge_backend, config.remote);
  Backends b{main.get(), main.get(), verifier ? verifier.get() : main.get(), judge ? judge.get() : main.get()};
  return run_pipeline(config, b, until);
}

// ---------------------------------------------------------------------------
// Training data

GrpoExport prepare_grpo(const std::vector<CandidateSet>& sets, const GrpoConfig& cfg) {
  cfg.validate();
  GrpoExport out;
  std::vector<CandidateSet> usable;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<double>> advantages;
  for (const auto& set : sets) {
    std::vector<double> r;
    for (const auto& c : set.candidates) {
      if (!c.reward) throw ConfigError("candidate " + std::to_string(c.candidate_index) + " of task " +
                                       set.task_id + " has no reward");
      r.push_back(*c.reward);
    }
    try {
      advantages.push_back(group_advantages(r, cfg.std_floor));
    } catch (const DegenerateGroup&) {
      ++out.degenerate_groups;
      continue;
    }
    rewards.push_back(std::move(r));
    usable.push_back(set);
  }
  out.records = export_training_records(usable, rewards, advantages);
  return out;
}

std::vector<SftPair> run_verifier_dataset(const PipelineConfig& config, const VerifierDataConfig& vcfg,
                                          PolicyClient& generator, PolicyClient& base, VerifierDatasetStats* stats) {
  const auto excluded = config.exclusions ? load_exclusion_list(*config.exclusions) : std::set<std::string>{};
  const auto bench = load_benchmark(config.tasks_path, config.db_root, excluded);
  std::vector<Task> tasks;
  for (const auto& t : bench.tasks)
    if (t.gold_sql) tasks.push_back(t);

  std::map<std::string, Schema> schemas;
  for (const auto& t : tasks) {
    if (schemas.contains(t.db_id)) continue;
    Database db(database_path(config.db_root, t.db_id));
    schemas.emplace(t.db_id, introspect_schema(db, t.db_id));
  }

  std::vector<CandidateSet> gen_sets(tasks.size());
  std::vector<CandidateSet> base_sets(tasks.size());
  parallel_for(tasks.size(), vcfg.workers, [&](std::size_t i) {
    const auto path = database_path(config.db_root, tasks[i].db_id);
    gen_sets[i] = rollout_group(tasks[i], schemas.at(tasks[i].db_id), generator, path, vcfg.episode, vcfg.candidates);
    base_sets[i] = rollout_group(tasks[i], schemas.at(tasks[i].db_id), base, path, vcfg.episode, vcfg.candidates);
  });
  std::map<std::string, CandidateSet> gen_map;
  std::map<std::string, CandidateSet> base_map;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    gen_map[tasks[i].task_id] = std::move(gen_sets[i]);
    base_map[tasks[i].task_id] = std::move(base_sets[i]);
  }

  const HintedGenerator hinted = [&](const Task& task, const std::string& gold) -> std::optional<Trajectory> {
    Database db(database_path(config.db_root, task.db_id));
    return run_episode_full(task, schemas.at(task.db_id), generator, db, vcfg.episode, 0, gold).trajectory;
  };
  return build_verifier_dataset(
      tasks, gen_map, base_map, [&](const std::string& db_id) { return database_path(config.db_root, db_id); },
      vcfg.seed, hinted, stats);
}

}  // namespace sqlagent
