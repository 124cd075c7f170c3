#include "sqlagent/core.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace sqlagent {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

namespace {

std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t pos) {
  if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = pos; i + needle.size() <= hay.size(); ++i) {
    if (iequals(hay.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

}  // namespace

// ---------------------------------------------------------------------------

const ColumnDef* TableDef::find_column(std::string_view column) const {
  for (const auto& c : columns)
    if (iequals(c.name, column)) return &c;
  return nullptr;
}

bool TableDef::is_key_column(std::string_view column) const {
  for (const auto& pk : primary_keys)
    if (iequals(pk, column)) return true;
  for (const auto& fk : foreign_keys)
    if (iequals(fk.column, column)) return true;
  return false;
}

const TableDef* Schema::find_table(std::string_view table) const {
  for (const auto& t : tables)
    if (iequals(t.name, table)) return &t;
  return nullptr;
}

void Schema::validate() const {
  std::set<std::string> names;
  for (const auto& t : tables) {
    if (!names.insert(to_lower(t.name)).second)
      throw ConfigError("duplicate table name: " + t.name);
    std::set<std::string> cols;
    for (const auto& c : t.columns)
      if (!cols.insert(to_lower(c.name)).second)
        throw ConfigError("duplicate column " + c.name + " in table " + t.name);
    for (const auto& pk : t.primary_keys)
      if (!t.find_column(pk))
        throw ConfigError("primary key " + pk + " is not a column of " + t.name);
  }
  for (const auto& t : tables) {
    for (const auto& fk : t.foreign_keys) {
      const auto* ref = find_table(fk.ref_table);
      if (!t.find_column(fk.column) || !ref || !ref->find_column(fk.ref_column))
        throw ConfigError("dangling foreign key " + t.name + "." + fk.column + " -> " +
                          fk.ref_table + "." + fk.ref_column);
    }
  }
}

void CandidateSet::validate() const {
  if (scores && scores->size() != candidates.size())
    throw ConfigError("scores and candidates differ in length for task " + task_id);
  if (selected_index && *selected_index >= candidates.size())
    throw ConfigError("selected index out of range for task " + task_id);
}

// ---------------------------------------------------------------------------
// parse_agent_turn

ParsedTurn parse_agent_turn(std::string_view raw) {
  constexpr std::string_view kThinkOpen = "<think>";
  constexpr std::string_view kThinkClose = "</think>";
  constexpr std::string_view kSolOpen = "<solution>";
  constexpr std::string_view kSolClose = "</solution>";
  constexpr std::string_view kSqlOpen = "<sql>";
  constexpr std::string_view kSqlClose = "</sql>";

  const bool fenced = raw.find("```") != std::string_view::npos;

  const auto think_open = raw.find(kThinkOpen);
  if (think_open == std::string_view::npos) {
    throw ProtocolError(fenced ? "SQL must be wrapped in <SQL> tags, not code fences"
                               : "completion has no <think> block");
  }
  const auto think_body = think_open + kThinkOpen.size();
  const auto think_close = raw.find(kThinkClose, think_body);
  if (think_close == std::string_view::npos) throw ProtocolError("unterminated <think> block");

  const std::string thought(trim(raw.substr(think_body, think_close - think_body)));
  if (thought.empty()) throw ProtocolError("empty <think> block");
  const auto after = think_close + kThinkClose.size();

  if (const auto sol_open = raw.find(kSolOpen, after); sol_open != std::string_view::npos) {
    const auto body = sol_open + kSolOpen.size();
    const auto close = raw.find(kSolClose, body);
    if (close == std::string_view::npos) throw ProtocolError("unterminated <solution> block");
    std::string sql(trim(raw.substr(body, close - body)));
    if (sql.empty()) throw ProtocolError("empty <solution> block");
    return {Terminal{thought, std::move(sql)}, close + kSolClose.size()};
  }

  const auto sql_open = ifind(raw, kSqlOpen, after);
  if (sql_open == std::string_view::npos) {
    throw ProtocolError(fenced ? "SQL must be wrapped in <SQL> tags, not code fences"
                               : "no <sql> or <solution> block follows <think>");
  }
  const auto body = sql_open + kSqlOpen.size();
  const auto close = ifind(raw, kSqlClose, body);
  if (close == std::string_view::npos) throw ProtocolError("unterminated <sql> block");
  std::string sql(trim(raw.substr(body, close - body)));
  if (sql.empty()) throw ProtocolError("empty <sql> block");
  return {Turn{thought, std::move(sql), std::nullopt}, close + kSqlClose.size()};
}

// ---------------------------------------------------------------------------
// parse_grounding_answer

namespace {

// Quoted-string list literal: ["a", 'b',] with arbitrary whitespace.
std::optional<std::vector<std::string>> parse_column_list(std::string_view s) {
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_ws();
  if (i >= s.size() || s[i] != '[') return std::nullopt;
  ++i;
  std::vector<std::string> out;
  for (;;) {
    skip_ws();
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ']') {
      ++i;
      break;
    }
    const char quote = s[i];
    if (quote != '"' && quote != '\'') return std::nullopt;
    ++i;
    std::string item;
    bool closed = false;
    while (i < s.size()) {
      char c = s[i++];
      if (c == '\\' && i < s.size()) {
        item.push_back(s[i++]);
      } else if (c == quote) {
        closed = true;
        break;
      } else {
        item.push_back(c);
      }
    }
    if (!closed) return std::nullopt;
    std::string name(trim(item));
    if (name.empty()) return std::nullopt;
    out.push_back(std::move(name));
    skip_ws();
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ',') {
      ++i;
      continue;
    }
    if (s[i] == ']') {
      ++i;
      break;
    }
    return std::nullopt;
  }
  skip_ws();
  if (i != s.size()) return std::nullopt;
  return out;
}

}  // namespace

GroundingDecision parse_grounding_answer(std::string_view raw) {
  GroundingDecision invalid{};
  const auto open = raw.find("<answer>");
  if (open == std::string_view::npos) return invalid;
  const auto body_start = open + 8;
  const auto close = raw.find("</answer>", body_start);
  if (close == std::string_view::npos) return invalid;
  auto body = trim(raw.substr(body_start, close - body_start));
  if (body.empty()) return invalid;

  std::size_t tok_end = 0;
  while (tok_end < body.size() && !std::isspace(static_cast<unsigned char>(body[tok_end])) &&
         body[tok_end] != '[')
    ++tok_end;
  const auto token = body.substr(0, tok_end);
  const auto rest = trim(body.substr(tok_end));

  if (iequals(token, "N")) {
    if (!rest.empty() && !parse_column_list(rest)) return invalid;
    return {Decision::N, {}, true};
  }
  if (iequals(token, "Y")) {
    auto columns = parse_column_list(rest);
    if (!columns) return invalid;
    return {Decision::Y, std::move(*columns), true};
  }
  return invalid;
}

Verdict parse_verifier_verdict(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && !std::isalpha(static_cast<unsigned char>(raw[i]))) ++i;
  std::size_t j = i;
  while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) ++j;
  const auto word = raw.substr(i, j - i);
  if (iequals(word, "yes")) return Verdict::Yes;
  if (iequals(word, "no")) return Verdict::No;
  return Verdict::Invalid;
}

std::string render_turn(const Turn& turn) {
  std::string out = "<think>" + turn.thought + "</think>";
  if (turn.action_sql) out += "\n<sql>" + *turn.action_sql + "</sql>";
  return out;
}

std::string render_terminal(const Terminal& terminal) {
  return "<think>" + terminal.thought + "</think>\n<solution>" + terminal.solution_sql +
         "</solution>";
}

std::string render_trajectory(const Trajectory& trajectory) {
  std::string out;
  for (const auto& turn : trajectory.turns) {
    if (!out.empty()) out += '\n';
    out += render_turn(turn);
    if (turn.observation) out += "\n<observation>\n" + *turn.observation + "\n</observation>";
  }
  if (trajectory.solution_sql) {
    if (!out.empty()) out += '\n';
    out += render_terminal({trajectory.final_thought, *trajectory.solution_sql});
  }
  return out;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::solved: return "solved";
    case Termination::turn_limit: return "turn_limit";
    case Termination::protocol_error: return "protocol_error";
  }
  return "unknown";
}

Termination termination_from_string(std::string_view s) {
  if (s == "solved") return Termination::solved;
  if (s == "turn_limit") return Termination::turn_limit;
  if (s == "protocol_error") return Termination::protocol_error;
  throw MalformedRecord("unknown termination: " + std::string(s));
}

std::string_view to_string(Decision d) { return d == Decision::Y ? "Y" : "N"; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "Yes";
    case Verdict::No: return "No";
    case Verdict::Invalid: return "Invalid";
  }
  return "Invalid";
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const Turn& turn) {
  j = nlohmann::json{{"thought", turn.thought},
                     {"sql", optional_json(turn.action_sql)},
                     {"observation", optional_json(turn.observation)}};
}

void from_json(const nlohmann::json& j, Turn& turn) {
  turn.thought = j.at("thought").get<std::string>();
  turn.action_sql = optional_from<std::string>(j, "sql");
  turn.observation = optional_from<std::string>(j, "observation");
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"task_id", t.task_id},
                     {"candidate_index", t.candidate_index},
                     {"turns", t.turns},
                     {"final_thought", t.final_thought},
                     {"solution", optional_json(t.solution_sql)},
                     {"reward", optional_json(t.reward)},
                     {"termination", to_string(t.termination)}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  try {
    t.task_id = j.at("task_id").get<std::string>();
    t.candidate_index = j.value("candidate_index", std::size_t{0});
    t.turns = j.at("turns").get<std::vector<Turn>>();
    t.final_thought = j.value("final_thought", std::string{});
    t.solution_sql = optional_from<std::string>(j, "solution");
    t.reward = optional_from<double>(j, "reward");
    t.termination = termination_from_string(j.at("termination").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(std::string("bad trajectory record: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const TableDef& table) {
  auto cols = nlohmann::json::array();
  for (const auto& c : table.columns) cols.push_back({{"name", c.name}, {"type", c.type}});
  auto fks = nlohmann::json::array();
  for (const auto& fk : table.foreign_keys)
    fks.push_back({{"column", fk.column}, {"ref_table", fk.ref_table}, {"ref_column", fk.ref_column}});
  j = nlohmann::json{{"name", table.name},
                     {"columns", cols},
                     {"primary_keys", table.primary_keys},
                     {"foreign_keys", fks}};
}

void from_json(const nlohmann::json& j, TableDef& table) {
  table.name = j.at("name").get<std::string>();
  table.columns.clear();
  for (const auto& c : j.at("columns"))
    table.columns.push_back({c.at("name").get<std::string>(), c.value("type", std::string{})});
  table.primary_keys = j.value("primary_keys", std::vector<std::string>{});
  table.foreign_keys.clear();
  if (j.contains("foreign_keys")) {
    for (const auto& fk : j.at("foreign_keys"))
      table.foreign_keys.push_back({fk.at("column").get<std::string>(),
                                    fk.at("ref_table").get<std::string>(),
                                    fk.at("ref_column").get<std::string>()});
  }
}

void to_json(nlohmann::json& j, const Schema& schema) {
  j = nlohmann::json{{"db_id", schema.db_id}, {"tables", schema.tables}};
}

void from_json(const nlohmann::json& j, Schema& schema) {
  schema.db_id = j.at("db_id").get<std::string>();
  schema.tables = j.at("tables").get<std::vector<TableDef>>();
}

std::string trajectories_to_jsonl(const std::vector<Trajectory>& trajectories) {
  std::string out;
  for (const auto& t : trajectories) {
    out += nlohmann::json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<Trajectory> trajectories_from_jsonl(std::string_view text) {
  std::vector<Trajectory> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<Trajectory>());
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(std::string("bad trajectory record: ") + e.what());
    }
  }
  return out;
}

std::vector<CandidateSet> group_candidates(std::vector<Trajectory> trajectories) {
  std::vector<CandidateSet> sets;
  std::map<std::string, std::size_t> index;
  for (auto& t : trajectories) {
    auto [it, inserted] = index.try_emplace(t.task_id, sets.size());
    if (inserted) sets.push_back(CandidateSet{t.task_id, {}, std::nullopt, std::nullopt});
    sets[it->second].candidates.push_back(std::move(t));
  }
  for (auto& set : sets) {
    std::stable_sort(set.candidates.begin(), set.candidates.end(),
                     [](const Trajectory& a, const Trajectory& b) {
                       return a.candidate_index < b.candidate_index;
                     });
  }
  return sets;
}

}  // namespace sqlagent
