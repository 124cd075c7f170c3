#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sqlagent/core.hpp"
#include "sqlagent/grounding.hpp"
#include "sqlagent/sqlgate.hpp"

namespace sqlagent {

/// db_root/<db_id>/<db_id>.sqlite
std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id);

struct Benchmark {
  std::vector<Task> tasks;
  /// One line per rejected record (missing database, excluded id).
  std::vector<std::string> diagnostics;
};

/// Reads a JSON array of task records. Recognised fields: question, db_id,
/// evidence or external_knowledge, SQL / sql / query / gold_sql, and
/// question_id (the record index is used when absent). Records whose
/// database file is missing or whose id is excluded are dropped with a
/// diagnostic. Throws MalformedRecord on a record without question or db_id.
Benchmark load_benchmark(const std::filesystem::path& tasks_path, const std::filesystem::path& db_root,
                         const std::set<std::string>& excluded = {});

/// Newline-delimited task ids; blank lines and '#' comments are ignored.
std::set<std::string> load_exclusion_list(const std::filesystem::path& path);

/// Every table (internal sqlite_ tables excluded) in catalog order, with
/// declared column types, primary keys in key order and foreign keys.
/// Throws CorruptDatabase.
Schema introspect_schema(const Database& db, const std::string& db_id = {});

struct GroundingInstance {
  Task task;
  TableDef table;
  GoldSchemaLabel label;
};

struct GroundingExpansion {
  std::vector<GroundingInstance> instances;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// One instance per (task, table). Tasks without gold SQL, without a known
/// schema or whose gold SQL fails to parse are skipped and counted.
GroundingExpansion expand_grounding_instances(const std::vector<Task>& tasks,
                                              const std::map<std::string, Schema>& schemas);

}  // namespace sqlagent
