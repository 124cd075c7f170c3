#include "sqlagent/generation.hpp"

#include <spdlog/spdlog.h>

#include <numeric>

#include "sqlagent/grounding.hpp"
#include "sqlagent/parallel.hpp"
#include "sqlagent/sql_refs.hpp"

namespace sqlagent {

void EpisodeConfig::validate() const {
  if (max_turns < 1) throw ConfigError("max_turns must be at least 1");
  if (row_cap < 1) throw ConfigError("row_cap must be at least 1");
  if (sampling.temperature < 0.0) throw ConfigError("temperature must be non-negative");
  if (sampling.top_p <= 0.0 || sampling.top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be at least 1");
}

std::string render_schema(const Schema& schema) {
  std::string out;
  for (const auto& t : schema.tables) {
    if (!out.empty()) out += "\n\n";
    out += render_table_info(t);
  }
  return out;
}

std::string build_generation_prompt(const Task& task, const Schema& schema,
                                    const std::optional<std::string>& gold_hint) {
  std::string out =
      "You are a data science expert. Below, you are provided with a database schema and a natural "
      "language question. Your task is to understand the schema and generate a valid SQL query to "
      "answer the question within limited turns. You should breakdown the problem, draft your "
      "reasoning process, and generate the solution.\n"
      "\n"
      "Database Engine:\n"
      "SQLite\n"
      "\n"
      "Database Schema:\n";
  out += render_schema(schema);
  out +=
      "\nThis schema describes the database's structure, including tables, columns, primary keys, "
      "foreign keys, and any relevant relationships or constraints.\n"
      "\n"
      "External Knowledge:\n";
  out += task.external_knowledge.value_or("");
  out += "\n\nQuestion:\n";
  out += task.question;
  out += "\n\n";
  if (gold_hint) {
    out += "Reference SQL (known to be correct, use it to guide your exploration):\n";
    out += *gold_hint;
    out += "\n\n";
  }
  out +=
      "Important Instructions:\n"
      "- Make sure you only output the information that is asked in the question. If the question "
      "asks for a specific column, make sure to only include that column in the SELECT clause, "
      "nothing more.\n"
      "- The generated query should return all of the information asked in the question without "
      "any missing or extra information.\n"
      "- Before generating the final SQL query, please think how to write the query. It should "
      "include detailed considerations such as analysing questions, summarizing relevant findings, "
      "brainstorming new ideas, verifying the accuracy of the current steps, refining any errors, "
      "thinking of how to call SQL tools, and revisiting previous steps.\n"
      "\n"
      "Output Format (STRICTLY ENFORCED):\n"
      "- Conduct thinking inside <think>...</think> blocks every time you get new observation or "
      "information. Start with <think>...</think> blocks in your responses as shown in the "
      "following example.\n"
      "- You can use SQL tool written within a single <SQL>your SQL</SQL> block to explore or "
      "verify. You can't use the format ```SQL ; \\n```, you must use the format <SQL>your "
      "SQL</SQL> to get the output. <SQL>your SQL</SQL> block should follow closely behind "
      "<think>...</think> block. SQL tool output will be shown as dataframe inside "
      "<observation>...</observation>. Based on this observation, you can think again and refine.\n"
      "- The returned dataframe will be truncated in 50 rows if observation is too long.\n"
      "- If you find no further exploration is needed or have only 1 turn left, you MUST directly "
      "provide the final SQL query solution inside <solution>...</solution>.\n"
      "- All your responses should be in the <think>...</think>, <sql>...</sql>, "
      "<observation>...</observation>, <solution>...</solution> blocks.\n"
      "\n"
      "Example:\n"
      "Question: how many pigs are in the farm?\n"
      "Database Schema:\n"
      "Table: animals\n"
      "- id (INTEGER, PRIMARY KEY)\n"
      "- species (TEXT)\n"
      "- age (INTEGER)\n"
      "- name (TEXT)\n"
      "\n"
      "Output:\n"
      "<think>I am querying how many pigs are in the farm. I will begin by checking if the "
      "'animals' table exists and contains entries with species = 'pig'.</think>\n"
      "<SQL>SELECT COUNT(*) FROM animals WHERE species = 'pig';</SQL>\n"
      "<observation>\n"
      "+----------+\n"
      "| COUNT(*) |\n"
      "+----------+\n"
      "|   12     |\n"
      "+----------+\n"
      "</observation>\n"
      "<think>The result indicates that there are 12 pigs in the farm. Since the question asks for "
      "how many pigs, I can now output the final SQL as the solution.</think>\n"
      "<solution>SELECT COUNT(*) FROM animals WHERE species = 'pig';</solution>";
  return out;
}

namespace {

std::size_t transcript_size(const Transcript& t) {
  return std::accumulate(t.begin(), t.end(), std::size_t{0},
                         [](std::size_t acc, const Message& m) { return acc + m.text.size(); });
}

std::string format_reminder(const std::string& problem) {
  return "Your previous response could not be used: " + problem +
         ". Respond with a <think>...</think> block followed by either a single <SQL>your SQL</SQL> "
         "block or a final <solution>...</solution> block.";
}

}  // namespace

Episode run_episode_full(const Task& task, const Schema& schema, PolicyClient& policy, const Database& db,
                         const EpisodeConfig& cfg, std::size_t candidate_index,
                         const std::optional<std::string>& gold_hint) {
  cfg.validate();
  Episode ep;
  auto& traj = ep.trajectory;
  auto& transcript = ep.transcript;
  traj.task_id = task.task_id;
  traj.candidate_index = candidate_index;
  transcript.push_back({Role::user, build_generation_prompt(task, schema, gold_hint)});

  const ExecOptions exec{cfg.row_cap, cfg.query_timeout};
  int used = 0;
  bool noticed = false;
  bool last_failed = false;

  while (used < cfg.max_turns) {
    if (!noticed && used == cfg.max_turns - 1) {
      transcript.push_back({Role::environment, std::string(kLastTurnNotice)});
      noticed = true;
    }
    if (transcript_size(transcript) > cfg.max_context_chars) {
      spdlog::info("task {} candidate {}: context budget exhausted", task.task_id, candidate_index);
      traj.termination = Termination::protocol_error;
      return ep;
    }

    CompletionRequest request{transcript, cfg.sampling, cfg.max_new_tokens, false};
    const auto response = policy.complete(request);

    ParsedTurn parsed;
    try {
      parsed = parse_agent_turn(response.text);
    } catch (const ProtocolError& e) {
      spdlog::info("task {} candidate {}: protocol error: {}", task.task_id, candidate_index, e.what());
      if (last_failed) {
        traj.termination = Termination::protocol_error;
        return ep;
      }
      last_failed = true;
      transcript.push_back({Role::assistant, response.text});
      transcript.push_back({Role::environment, format_reminder(e.what())});
      continue;
    }
    last_failed = false;
    ++used;
    transcript.push_back({Role::assistant, response.text.substr(0, parsed.extent)});

    if (auto* terminal = std::get_if<Terminal>(&parsed.step)) {
      traj.final_thought = terminal->thought;
      traj.solution_sql = terminal->solution_sql;
      traj.termination = Termination::solved;
      return ep;
    }

    auto turn = std::get<Turn>(std::move(parsed.step));
    const auto result = execute(db, *turn.action_sql, exec);
    turn.observation = render_observation(result);
    transcript.push_back({Role::environment, "<observation>\n" + *turn.observation + "\n</observation>"});
    traj.turns.push_back(std::move(turn));
  }
  traj.termination = Termination::turn_limit;
  return ep;
}

Trajectory run_episode(const Task& task, const Schema& schema, PolicyClient& policy, const Database& db,
                       const EpisodeConfig& cfg, std::size_t candidate_index) {
  return run_episode_full(task, schema, policy, db, cfg, candidate_index).trajectory;
}

CandidateSet rollout_group(const Task& task, const Schema& schema, PolicyClient& policy,
                           const std::filesystem::path& db_path, const EpisodeConfig& cfg, std::size_t n,
                           std::size_t workers) {
  if (n < 1) throw ConfigError("group size must be at least 1");
  cfg.validate();
  CandidateSet set;
  set.task_id = task.task_id;
  set.candidates.resize(n);
  const auto base = cfg.sampling.seed.value_or(0);
  parallel_for(n, workers, [&](std::size_t i) {
    Database db(db_path);
    auto c = cfg;
    c.sampling.seed = base + static_cast<std::int64_t>(i);
    set.candidates[i] = run_episode(task, schema, policy, db, c, i);
  });
  return set;
}

GoldReference make_gold_reference(const std::string& gold_sql, const Database& db) {
  GoldReference gold{execute(db, gold_sql), has_top_level_order_by(gold_sql)};
  if (!gold.result.ok())
    throw GoldExecutionFailure("gold query failed: " + gold.result.error_message.value_or("unknown error"));
  return gold;
}

double score_solution(const std::optional<std::string>& solution_sql, const GoldReference& gold,
                      const Database& db) {
  if (!solution_sql) return -1.0;
  const auto result = execute(db, *solution_sql);
  if (!result.ok()) return -1.0;
  return results_equal(result, gold.result, gold.order_sensitive) ? 1.0 : 0.0;
}

double gen_reward(const Trajectory& trajectory, const std::string& gold_sql, const Database& db) {
  return score_solution(trajectory.solution_sql, make_gold_reference(gold_sql, db), db);
}

}  // namespace sqlagent
