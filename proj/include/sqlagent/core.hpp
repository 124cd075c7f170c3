#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sqlagent/errors.hpp"

namespace sqlagent {

// ---------------------------------------------------------------------------
// Schema

struct ColumnDef {
  std::string name;
  std::string type;  // declared type, may be empty

  bool operator==(const ColumnDef&) const = default;
};

struct ForeignKey {
  std::string column;
  std::string ref_table;
  std::string ref_column;

  bool operator==(const ForeignKey&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::vector<std::string> primary_keys;
  std::vector<ForeignKey> foreign_keys;

  /// Case-insensitive lookup, as the engine resolves identifiers.
  const ColumnDef* find_column(std::string_view column) const;
  bool is_key_column(std::string_view column) const;

  bool operator==(const TableDef&) const = default;
};

struct Schema {
  std::string db_id;
  std::vector<TableDef> tables;

  const TableDef* find_table(std::string_view table) const;

  /// Throws ConfigError when table names collide, a column repeats, a primary
  /// key is not a column, or a foreign key dangles.
  void validate() const;

  bool operator==(const Schema&) const = default;
};

// ---------------------------------------------------------------------------
// Tasks and trajectories

struct Task {
  std::string task_id;
  std::string question;
  std::string db_id;
  std::optional<std::string> external_knowledge;
  std::optional<std::string> gold_sql;
};

/// One Think-Act-Observe step. Observation is present iff an action was taken.
struct Turn {
  std::string thought;
  std::optional<std::string> action_sql;
  std::optional<std::string> observation;

  bool operator==(const Turn&) const = default;
};

/// A completion that ends the episode with a final query.
struct Terminal {
  std::string thought;
  std::string solution_sql;

  bool operator==(const Terminal&) const = default;
};

enum class Termination { solved, turn_limit, protocol_error };

struct Trajectory {
  std::string task_id;
  std::size_t candidate_index = 0;
  std::vector<Turn> turns;
  std::string final_thought;  // thought that accompanied the solution
  std::optional<std::string> solution_sql;
  std::optional<double> reward;
  Termination termination = Termination::turn_limit;

  bool operator==(const Trajectory&) const = default;
};

enum class Decision { Y, N };

struct GroundingDecision {
  Decision decision = Decision::N;
  std::vector<std::string> columns;
  bool valid_format = false;

  bool operator==(const GroundingDecision&) const = default;
};

struct CandidateSet {
  std::string task_id;
  std::vector<Trajectory> candidates;
  std::optional<std::vector<double>> scores;
  std::optional<std::size_t> selected_index;

  /// Throws ConfigError when scores and candidates disagree in length or the
  /// selected index is out of range.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Agent-output grammars

struct ParsedTurn {
  std::variant<Turn, Terminal> step;
  /// Byte length of the prefix of the completion that was consumed. Text past
  /// this point (extra blocks, self-authored observations) is ignored.
  std::size_t extent = 0;
};

/// Parses one generation completion. The first `<think>` block supplies the
/// thought; a `<solution>` block after it makes the step terminal, otherwise
/// the first `<sql>` block (any case) is the action.
/// Throws ProtocolError on a missing think block, a missing action, empty
/// contents, or SQL fenced in backticks instead of tags.
ParsedTurn parse_agent_turn(std::string_view raw);

/// Never throws; malformed input comes back with valid_format = false.
GroundingDecision parse_grounding_answer(std::string_view raw);

enum class Verdict { Yes, No, Invalid };

/// Matches the first alphabetic token against yes/no, case-insensitively.
Verdict parse_verifier_verdict(std::string_view raw);

/// Tag-form rendering of a turn, as the model is asked to write it.
std::string render_turn(const Turn& turn);
std::string render_terminal(const Terminal& terminal);

/// Whole trajectory in tag form, observations included, ending with the
/// solution block when there is one.
std::string render_trajectory(const Trajectory& trajectory);

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);
std::string_view to_string(Decision d);
std::string_view to_string(Verdict v);

// ---------------------------------------------------------------------------
// Trajectory line-delimited JSON

void to_json(nlohmann::json& j, const Turn& turn);
void from_json(const nlohmann::json& j, Turn& turn);
void to_json(nlohmann::json& j, const Trajectory& trajectory);
void from_json(const nlohmann::json& j, Trajectory& trajectory);
void to_json(nlohmann::json& j, const TableDef& table);
void from_json(const nlohmann::json& j, TableDef& table);
void to_json(nlohmann::json& j, const Schema& schema);
void from_json(const nlohmann::json& j, Schema& schema);

/// Serializes one trajectory per line, in the given order.
std::string trajectories_to_jsonl(const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> trajectories_from_jsonl(std::string_view text);

/// Groups trajectories by task id (preserving first-seen task order and
/// candidate_index order within a task).
std::vector<CandidateSet> group_candidates(std::vector<Trajectory> trajectories);

// ---------------------------------------------------------------------------
// Small text helpers shared across modules.

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

}  // namespace sqlagent
