#include "sqlagent/validation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <random>

#include "sqlagent/generation.hpp"

namespace sqlagent {

std::string build_verifier_prompt(const Task& task, const Trajectory& trajectory) {
  std::string out =
      "Task Background:\n"
      "You are an expert SQL data analyst. Your task is to verify if a proposed solution correctly "
      "answers a user's question.\n"
      "\n"
      "Problem:\n";
  out += task.question;
  out += "\n\nExternal Knowledge:\n";
  out += task.external_knowledge.value_or("");
  out += "\n\nProposed Solution:\n";
  out += render_trajectory(trajectory);
  out +=
      "\n\n---\n"
      "Your Task:\n"
      "Based on all the information, is the SQL query in the solution logically correct for "
      "answering the question?\n"
      "You must answer with \"Yes\" or \"No\" first, before any other text.\n"
      "\n"
      "Is the answer correct (Yes/No)?";
  return out;
}

double yes_probability(const TokenDistribution& distribution) {
  double mass = 0.0;
  for (const auto& [token, p] : distribution) {
    std::size_t i = 0;
    while (i < token.size() && std::isspace(static_cast<unsigned char>(token[i]))) ++i;
    if (iequals(std::string_view(token).substr(i), "yes")) mass += p;
  }
  return mass;
}

VerifierScore score_trajectory(PolicyClient& policy, const Task& task, const Trajectory& trajectory, int m,
                               const SamplingParams& sampling) {
  if (m < 1) throw ConfigError("verifier rounds must be at least 1");
  const Transcript transcript{{Role::user, build_verifier_prompt(task, trajectory)}};
  const auto base = sampling.seed.value_or(0);
  VerifierScore score;
  for (int round = 0; round < m; ++round) {
    CompletionRequest request{transcript, sampling, 1, true};
    request.sampling.seed = base + round;
    const auto response = policy.complete(request);
    double p = 0.0;
    if (response.first_token_distribution) {
      p = yes_probability(*response.first_token_distribution);
    } else {
      p = parse_verifier_verdict(response.text) == Verdict::Yes ? 1.0 : 0.0;
    }
    score.per_round.push_back(std::clamp(p, 0.0, 1.0));
  }
  double total = 0.0;
  for (double p : score.per_round) total += p;
  score.mean = total / static_cast<double>(m);
  return score;
}

std::size_t select_best(const std::vector<double>& means) {
  if (means.empty()) throw NoCandidates("nothing to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i] > means[best]) best = i;
  return best;
}

std::size_t select_best(const std::vector<VerifierScore>& scores) {
  std::vector<double> means;
  means.reserve(scores.size());
  for (const auto& s : scores) means.push_back(s.mean);
  return select_best(means);
}

std::size_t self_consistency_select(const CandidateSet& candidates, const Database& db) {
  if (candidates.candidates.empty()) throw NoCandidates("no candidates for " + candidates.task_id);
  struct Class {
    std::size_t first;
    std::size_t size;
    ExecutionResult result;
  };
  std::vector<Class> classes;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto& sql = candidates.candidates[i].solution_sql;
    if (!sql) continue;
    auto result = execute(db, *sql);
    if (!result.ok()) continue;
    auto it = std::find_if(classes.begin(), classes.end(),
                           [&](const Class& c) { return results_equal(c.result, result, false); });
    if (it == classes.end())
      classes.push_back({i, 1, std::move(result)});
    else
      ++it->size;
  }
  if (classes.empty()) return 0;
  const Class* best = &classes.front();
  for (const auto& c : classes)
    if (c.size > best->size) best = &c;
  return best->first;
}

std::string format_judge_candidates(const CandidateSet& candidates, const Database& db) {
  std::string out;
  for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
    const auto& c = candidates.candidates[i];
    std::string reasoning;
    for (const auto& t : c.turns) reasoning += (reasoning.empty() ? "" : "\n") + t.thought;
    if (!c.final_thought.empty()) reasoning += (reasoning.empty() ? "" : "\n") + c.final_thought;

    if (i) out += "\n\n";
    out += "Candidate " + std::to_string(i) + ":\n";
    out += "Reasoning:\n" + reasoning + "\n";
    if (c.solution_sql) {
      out += "SQL:\n" + *c.solution_sql + "\n";
      out += "Execution Observation:\n" +
             render_observation(execute(db, *c.solution_sql, ExecOptions{kObservationRowCap}));
    } else {
      out += "SQL:\n(no final query)\nExecution Observation:\n(not executed)";
    }
  }
  return out;
}

std::string build_judge_prompt(const Task& task, const CandidateSet& candidates, const Database& db) {
  std::string out =
      "Task Background:\n"
      "You are an expert SQL data analyst. Your task is to select the BEST SQL query that correctly "
      "answers a user's question.\n"
      "\n"
      "You are given several candidates. For each candidate, you will see its reasoning, the SQL "
      "query itself, and importantly, the result of executing that query on the database. A query "
      "might look correct but return an error or empty/wrong data. You must use the execution "
      "observation to make your final decision.\n"
      "\n"
      "Here is the user's question:\n";
  out += task.question;
  out +=
      "\n\nEvaluate the following candidates based on ALL available information. Does the "
      "\"Execution Observation\" for a candidate actually answer the user's question?\n"
      "---\n";
  out += format_judge_candidates(candidates, db);
  out +=
      "\n---\n"
      "\n"
      "Final Analysis:\n"
      "Considering the reasoning, the SQL code, and especially the execution results, which single "
      "candidate provides the most correct and complete answer to the user's question?\n"
      "\n"
      "Instructions for your response:\n"
      "- Respond with ONLY the index number of the single best candidate.\n"
      "- If multiple candidates produce correct results, select the one with the LOWEST index "
      "number.\n"
      "- Do not include any other words, symbols, or explanations.\n"
      "\n"
      "Best candidate index:";
  return out;
}

std::optional<std::size_t> parse_judge_index(std::string_view reply, std::size_t n) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
  if (i == reply.size()) return std::nullopt;
  std::size_t value = 0;
  for (; i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i])); ++i) {
    value = value * 10 + static_cast<std::size_t>(reply[i] - '0');
    if (value >= n) return std::nullopt;
  }
  return value;
}

JudgeOutcome llm_judge_select(const Task& task, const CandidateSet& candidates, PolicyClient& judge,
                              const Database& db, const SamplingParams& sampling) {
  if (candidates.candidates.empty()) throw NoCandidates("no candidates for " + candidates.task_id);
  CompletionRequest request{{{Role::user, build_judge_prompt(task, candidates, db)}}, sampling, 16, false};
  JudgeOutcome out;
  out.reply = judge.complete(request).text;
  if (auto idx = parse_judge_index(out.reply, candidates.candidates.size())) {
    out.index = *idx;
  } else {
    out.diagnostic = "judge reply has no usable index: '" + out.reply + "'";
    spdlog::warn("task {}: {}", task.task_id, *out.diagnostic);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(PairLabel label) { return label == PairLabel::Yes ? "Yes" : "No"; }

std::string_view to_string(PairSource source) {
  switch (source) {
    case PairSource::generator: return "generator";
    case PairSource::base_model: return "base_model";
    case PairSource::gold_hinted: return "gold_hinted";
  }
  return "generator";
}

namespace {

struct Pooled {
  const Trajectory* trajectory;
  PairSource source;
  double reward;
  std::size_t chars;
};

}  // namespace

std::vector<SftPair> build_verifier_dataset(const std::vector<Task>& tasks,
                                            const std::map<std::string, CandidateSet>& generator_sets,
                                            const std::map<std::string, CandidateSet>& base_sets,
                                            const DatabaseResolver& dbs, std::uint64_t seed,
                                            const HintedGenerator& hinted, VerifierDatasetStats* stats) {
  VerifierDatasetStats local;
  std::mt19937_64 rng(seed);
  std::vector<SftPair> out;

  for (const auto& task : tasks) {
    if (!task.gold_sql) throw ConfigError("task " + task.task_id + " has no gold query");
    std::vector<std::pair<const CandidateSet*, PairSource>> sources;
    if (auto it = generator_sets.find(task.task_id); it != generator_sets.end())
      sources.emplace_back(&it->second, PairSource::generator);
    if (auto it = base_sets.find(task.task_id); it != base_sets.end())
      sources.emplace_back(&it->second, PairSource::base_model);

    Database db(dbs(task.db_id));
    std::optional<GoldReference> gold;
    try {
      gold = make_gold_reference(*task.gold_sql, db);
    } catch (const GoldExecutionFailure& e) {
      spdlog::warn("task {}: skipped, {}", task.task_id, e.what());
      ++local.skipped;
      continue;
    }

    std::vector<Pooled> pool;
    for (const auto& [set, source] : sources)
      for (const auto& c : set->candidates)
        pool.push_back({&c, source, score_solution(c.solution_sql, *gold, db), render_trajectory(c).size()});
    if (pool.empty()) throw NoCandidates("task " + task.task_id + " has an empty candidate pool");
    ++local.tasks;

    std::vector<Pooled> correct;
    std::vector<Pooled> incorrect;
    for (const auto& p : pool) (p.reward == 1.0 ? correct : incorrect).push_back(p);

    auto pair_of = [&](const Trajectory& t, PairLabel label, PairSource source) {
      return SftPair{task.task_id, build_verifier_prompt(task, t), label, source};
    };

    std::optional<SftPair> yes;
    std::optional<Trajectory> hinted_trajectory;
    if (!correct.empty()) {
      const auto best = std::min_element(correct.begin(), correct.end(), [](const Pooled& a, const Pooled& b) {
        const auto ka = std::tuple(a.trajectory->turns.size(), a.chars, a.trajectory->candidate_index);
        const auto kb = std::tuple(b.trajectory->turns.size(), b.chars, b.trajectory->candidate_index);
        return ka < kb;
      });
      yes = pair_of(*best->trajectory, PairLabel::Yes, best->source);
    } else {
      hinted_trajectory = hinted ? hinted(task, *task.gold_sql) : std::nullopt;
      if (hinted_trajectory && score_solution(hinted_trajectory->solution_sql, *gold, db) == 1.0) {
        yes = pair_of(*hinted_trajectory, PairLabel::Yes, PairSource::gold_hinted);
        ++local.hinted;
      } else {
        spdlog::info("task {}: hinted generation did not solve the task", task.task_id);
        ++local.hint_failures;
        continue;
      }
    }

    if (incorrect.empty()) {
      ++local.only_correct;
      out.push_back(std::move(*yes));
      continue;
    }
    if (!correct.empty()) ++local.both_classes;

    const auto worst = std::min_element(incorrect.begin(), incorrect.end(), [](const Pooled& a, const Pooled& b) {
      const auto ka = std::tuple(a.reward, -static_cast<long long>(a.trajectory->turns.size()),
                                 -static_cast<long long>(a.chars), a.trajectory->candidate_index);
      const auto kb = std::tuple(b.reward, -static_cast<long long>(b.trajectory->turns.size()),
                                 -static_cast<long long>(b.chars), b.trajectory->candidate_index);
      return ka < kb;
    });
    auto no = pair_of(*worst->trajectory, PairLabel::No, worst->source);
    if (rng() & 1U) {
      out.push_back(std::move(no));
      out.push_back(std::move(*yes));
    } else {
      out.push_back(std::move(*yes));
      out.push_back(std::move(no));
    }
  }
  if (stats) *stats = local;
  return out;
}

std::string sft_pairs_to_jsonl(const std::vector<SftPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += nlohmann::json{{"task_id", p.task_id},
                          {"prompt", p.prompt},
                          {"completion", to_string(p.label)},
                          {"source", to_string(p.source)}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace sqlagent
