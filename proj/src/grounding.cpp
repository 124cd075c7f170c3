#include "sqlagent/grounding.hpp"

#include <algorithm>
#include <stdexcept>

#include "sqlagent/sql_refs.hpp"

namespace sqlagent {

std::string render_table_info(const TableDef& table) {
  std::string out = "Table: " + table.name;
  for (const auto& col : table.columns) {
    std::vector<std::string> tags;
    if (!col.type.empty()) tags.push_back(col.type);
    for (const auto& pk : table.primary_keys)
      if (iequals(pk, col.name)) tags.emplace_back("PRIMARY KEY");
    for (const auto& fk : table.foreign_keys)
      if (iequals(fk.column, col.name))
        tags.push_back("FOREIGN KEY -> " + fk.ref_table + "." + fk.ref_column);
    out += "\n- " + col.name;
    if (!tags.empty()) {
      out += " (";
      for (std::size_t i = 0; i < tags.size(); ++i) out += (i ? ", " : "") + tags[i];
      out += ")";
    }
  }
  return out;
}

std::string build_grounding_prompt(const Task& task, const TableDef& table) {
  std::string out;
  out +=
      "You are doing table level schema linking. Given a table with schema information and the "
      "task, you should think step by step and decide whether this table is related to the task.\n"
      "Your thought process should be enclosed in <think></think> tags, and your final decision in "
      "<answer></answer> tags.\n"
      "For the answer, first state 'Y' for relevant or 'N' for not relevant. If relevant, also "
      "provide a Python list of the column names you believe are most useful.\n"
      "\n"
      "Example of a final answer format:\n"
      "<answer>\n"
      "Y\n"
      "[\"player_name\", \"team_name\", \"matches_played\"]\n"
      "</answer>\n"
      "\n"
      "or\n"
      "\n"
      "<answer>\n"
      "N\n"
      "</answer>\n"
      "\n"
      "Here is the information for the current task:\n"
      "\n"
      "### Table Information:\n";
  out += render_table_info(table);
  out += "\n### User Question:\n";
  out += task.question;
  out += "\n### External Knowledge (if any):\n";
  out += task.external_knowledge.value_or("");
  out += "\n\nLet me solve this step by step.\n<think>";
  return out;
}

namespace {

std::set<std::string> lowered(const std::vector<std::string>& cols) {
  std::set<std::string> out;
  for (const auto& c : cols) out.insert(to_lower(c));
  return out;
}

std::set<std::string> lowered(const std::set<std::string>& cols) {
  std::set<std::string> out;
  for (const auto& c : cols) out.insert(to_lower(c));
  return out;
}

}  // namespace

double ground_reward(const GroundingDecision& pred, const GoldSchemaLabel& gold) {
  if (!pred.valid_format) return 0.0;
  const bool pred_y = pred.decision == Decision::Y;
  if (!pred_y) return gold.relevant ? 0.0 : 1.0;
  if (!gold.relevant) return 0.2;

  const auto predicted = lowered(pred.columns);
  const auto wanted = lowered(gold.gold_columns);
  if (predicted == wanted) return 1.0;
  const bool covers = std::includes(predicted.begin(), predicted.end(), wanted.begin(), wanted.end());
  if (!covers) return 0.1;
  return std::max(0.5, static_cast<double>(wanted.size()) / static_cast<double>(predicted.size()));
}

ReducedSchema assemble_reduced_schema(const Schema& schema,
                                      const std::map<std::string, GroundingDecision>& decisions) {
  auto lookup = [&](const std::string& table) -> const GroundingDecision& {
    if (auto it = decisions.find(table); it != decisions.end()) return it->second;
    for (const auto& [name, d] : decisions)
      if (iequals(name, table)) return d;
    throw std::invalid_argument("no grounding decision for table " + table);
  };

  std::set<std::string> kept_tables;
  for (const auto& t : schema.tables) {
    const auto& d = lookup(t.name);
    if (d.valid_format && d.decision == Decision::Y) kept_tables.insert(to_lower(t.name));
  }
  if (kept_tables.empty()) throw EmptySchema("grounding kept no table of " + schema.db_id);

  ReducedSchema out;
  for (const auto& t : schema.tables) {
    if (!kept_tables.contains(to_lower(t.name))) continue;
    const auto predicted = lowered(lookup(t.name).columns);
    TableDef entry;
    entry.name = t.name;
    entry.primary_keys = t.primary_keys;
    for (const auto& c : t.columns)
      if (predicted.contains(to_lower(c.name)) || t.is_key_column(c.name)) entry.columns.push_back(c);
    for (const auto& fk : t.foreign_keys)
      if (kept_tables.contains(to_lower(fk.ref_table))) entry.foreign_keys.push_back(fk);
    out.entries.push_back(std::move(entry));
  }
  return out;
}

std::vector<GoldSchemaLabel> extract_gold_schema(std::string_view gold_sql, const Schema& schema) {
  const auto refs = extract_references(gold_sql, schema);
  std::vector<GoldSchemaLabel> labels;
  labels.reserve(schema.tables.size());
  for (const auto& t : schema.tables) {
    GoldSchemaLabel label{t.name, refs.references(t.name), {}};
    if (label.relevant) label.gold_columns = refs.columns_of(t.name);
    labels.push_back(std::move(label));
  }
  return labels;
}

GroundingMetrics grounding_metrics(const std::vector<QualifiedColumns>& preds,
                                   const std::vector<QualifiedColumns>& golds) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("grounding_metrics: predictions and golds are not aligned");
  if (preds.empty()) return {};
  double covered = 0.0;
  double precision_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& g = golds[i];
    if (std::includes(p.begin(), p.end(), g.begin(), g.end())) covered += 1.0;
    if (!p.empty()) {
      std::size_t hit = 0;
      for (const auto& c : p) hit += g.contains(c) ? 1 : 0;
      precision_sum += static_cast<double>(hit) / static_cast<double>(p.size());
    }
  }
  const auto n = static_cast<double>(preds.size());
  return {covered / n, precision_sum / n};
}

QualifiedColumns predicted_columns(const std::map<std::string, GroundingDecision>& decisions) {
  QualifiedColumns out;
  for (const auto& [table, d] : decisions) {
    if (!d.valid_format || d.decision != Decision::Y) continue;
    for (const auto& c : d.columns) out.insert(to_lower(table) + "." + to_lower(c));
  }
  return out;
}

QualifiedColumns gold_columns(const std::vector<GoldSchemaLabel>& labels) {
  QualifiedColumns out;
  for (const auto& l : labels)
    for (const auto& c : l.gold_columns) out.insert(to_lower(l.table) + "." + to_lower(c));
  return out;
}

void to_json(nlohmann::json& j, const GoldSchemaLabel& label) {
  j = nlohmann::json{{"table", label.table},
                     {"relevant", label.relevant},
                     {"columns", std::vector<std::string>(label.gold_columns.begin(), label.gold_columns.end())}};
}

void from_json(const nlohmann::json& j, GoldSchemaLabel& label) {
  label.table = j.at("table").get<std::string>();
  label.relevant = j.at("relevant").get<bool>();
  const auto cols = j.at("columns").get<std::vector<std::string>>();
  label.gold_columns = {cols.begin(), cols.end()};
}

void to_json(nlohmann::json& j, const GroundingDecision& d) {
  j = nlohmann::json{{"decision", to_string(d.decision)}, {"columns", d.columns}, {"valid_format", d.valid_format}};
}

void from_json(const nlohmann::json& j, GroundingDecision& d) {
  d.decision = j.at("decision").get<std::string>() == "Y" ? Decision::Y : Decision::N;
  d.columns = j.at("columns").get<std::vector<std::string>>();
  d.valid_format = j.at("valid_format").get<bool>();
}

}  // namespace sqlagent
