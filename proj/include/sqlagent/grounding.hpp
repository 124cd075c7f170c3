#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlagent/core.hpp"

namespace sqlagent {

/// Ground truth for one (question, table) pair, derived from the gold query.
struct GoldSchemaLabel {
  std::string table;
  bool relevant = false;
  std::set<std::string> gold_columns;  // schema spelling; empty when !relevant
};

/// Tables the grounding stage kept, each restricted to its selected columns.
struct ReducedSchema {
  std::vector<TableDef> entries;

  Schema as_schema(std::string db_id) const { return Schema{std::move(db_id), entries}; }
};

/// Per-table descriptive block: name, columns with types and key markers,
/// and outgoing foreign keys.
std::string render_table_info(const TableDef& table);

std::string build_grounding_prompt(const Task& task, const TableDef& table);

/// Piecewise grounding reward:
///   1.0  decision and column set match exactly (N/N included)
///   max(0.5, |Cg|/|Cp|)  both Y and Cg is a strict subset of Cp
///   0.2  predicted Y on an irrelevant table
///   0.1  both Y and some gold column is missing
///   0.0  invalid format, or N on a relevant table
/// Columns compare case-insensitively; hallucinated names count toward |Cp|.
double ground_reward(const GroundingDecision& pred, const GoldSchemaLabel& gold);

/// Keeps tables whose decision is Y. Predicted columns are intersected with
/// the real ones; primary and foreign key columns of kept tables are always
/// included. Foreign keys survive only when their target table is kept.
/// Throws EmptySchema when nothing is kept, std::invalid_argument when a
/// table has no decision.
ReducedSchema assemble_reduced_schema(const Schema& schema,
                                      const std::map<std::string, GroundingDecision>& decisions);

/// One label per schema table, in schema order. Throws ParseFailure.
std::vector<GoldSchemaLabel> extract_gold_schema(std::string_view gold_sql, const Schema& schema);

struct GroundingMetrics {
  double recall = 0.0;
  double precision = 0.0;
};

/// Per-question column sets, qualified as "table.column" in lower case.
using QualifiedColumns = std::set<std::string>;

/// recall: share of questions whose predicted columns cover the gold ones.
/// precision: mean over questions of |gold ∩ pred| / |pred| (0 when pred is
/// empty). Inputs are aligned per question.
GroundingMetrics grounding_metrics(const std::vector<QualifiedColumns>& preds,
                                   const std::vector<QualifiedColumns>& golds);

/// Qualified column set a question's decisions select (decision Y only).
QualifiedColumns predicted_columns(const std::map<std::string, GroundingDecision>& decisions);
QualifiedColumns gold_columns(const std::vector<GoldSchemaLabel>& labels);

void to_json(nlohmann::json& j, const GoldSchemaLabel& label);
void from_json(const nlohmann::json& j, GoldSchemaLabel& label);
void to_json(nlohmann::json& j, const GroundingDecision& d);
void from_json(const nlohmann::json& j, GroundingDecision& d);

}  // namespace sqlagent
