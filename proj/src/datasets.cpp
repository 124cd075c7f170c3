#include "sqlagent/datasets.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>

#include "json.hpp"

namespace sqlagent {

std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id) {
  return db_root / db_id / (db_id + ".sqlite");
}

namespace {

std::optional<std::string> first_string(const nlohmann::json& record, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (record.contains(k) && record.at(k).is_string()) return record.at(k).get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

Benchmark load_benchmark(const std::filesystem::path& tasks_path, const std::filesystem::path& db_root,
                         const std::set<std::string>& excluded) {
  std::ifstream in(tasks_path);
  if (!in) throw ConfigError("cannot read task file " + tasks_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedRecord(tasks_path.string() + " is not JSON: " + e.what());
  }
  if (!doc.is_array()) throw MalformedRecord(tasks_path.string() + " must hold a JSON array of tasks");

  Benchmark out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    if (!r.is_object()) throw MalformedRecord("record " + std::to_string(i) + " is not an object");
    Task t;
    if (r.contains("question_id") && r.at("question_id").is_number_integer())
      t.task_id = std::to_string(r.at("question_id").get<long long>());
    else if (auto id = first_string(r, {"question_id", "task_id"}))
      t.task_id = *id;
    else
      t.task_id = std::to_string(i);

    auto question = first_string(r, {"question"});
    auto db_id = first_string(r, {"db_id"});
    if (!question || trim(*question).empty())
      throw MalformedRecord("record " + std::to_string(i) + " has no question");
    if (!db_id || db_id->empty()) throw MalformedRecord("record " + std::to_string(i) + " has no db_id");
    t.question = *question;
    t.db_id = *db_id;
    t.external_knowledge = first_string(r, {"evidence", "external_knowledge"});
    t.gold_sql = first_string(r, {"SQL", "sql", "query", "gold_sql"});

    if (!seen.insert(t.task_id).second)
      throw MalformedRecord("duplicate task id " + t.task_id + " at record " + std::to_string(i));
    if (excluded.contains(t.task_id)) {
      out.diagnostics.push_back("task " + t.task_id + ": excluded");
      continue;
    }
    if (!std::filesystem::exists(database_path(db_root, t.db_id))) {
      out.diagnostics.push_back("task " + t.task_id + ": database " + t.db_id + " not found under " +
                                db_root.string());
      continue;
    }
    out.tasks.push_back(std::move(t));
  }
  return out;
}

std::set<std::string> load_exclusion_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read exclusion list " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto id = trim(line);
    if (id.empty() || id.front() == '#') continue;
    out.emplace(id);
  }
  return out;
}

namespace {

using Stmt = std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)>;

Stmt prepare(const Database& db, const char* sql) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db.handle(), sql, -1, &raw, nullptr) != SQLITE_OK)
    throw CorruptDatabase(db.path().string() + ": " + sqlite3_errmsg(db.handle()));
  return Stmt(raw, &sqlite3_finalize);
}

std::string text_at(sqlite3_stmt* s, int col) {
  const auto* p = sqlite3_column_text(s, col);
  return p ? reinterpret_cast<const char*>(p) : "";
}

void step_all(const Database& db, sqlite3_stmt* s, const std::function<void()>& on_row) {
  for (;;) {
    const int rc = sqlite3_step(s);
    if (rc == SQLITE_DONE) return;
    if (rc != SQLITE_ROW) throw CorruptDatabase(db.path().string() + ": " + sqlite3_errmsg(db.handle()));
    on_row();
  }
}

}  // namespace

Schema introspect_schema(const Database& db, const std::string& db_id) {
  Schema schema;
  schema.db_id = db_id.empty() ? db.path().stem().string() : db_id;

  auto tables = prepare(db,
                        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' "
                        "ESCAPE '\\' ORDER BY rowid");
  step_all(db, tables.get(), [&] { schema.tables.push_back(TableDef{text_at(tables.get(), 0), {}, {}, {}}); });

  auto cols = prepare(db, "SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid");
  auto fks = prepare(db, "SELECT \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq");
  for (auto& t : schema.tables) {
    std::vector<std::pair<int, std::string>> pk;
    sqlite3_reset(cols.get());
    sqlite3_bind_text(cols.get(), 1, t.name.c_str(), -1, SQLITE_TRANSIENT);
    step_all(db, cols.get(), [&] {
      t.columns.push_back({text_at(cols.get(), 0), text_at(cols.get(), 1)});
      if (const int k = sqlite3_column_int(cols.get(), 2); k > 0) pk.emplace_back(k, t.columns.back().name);
    });
    std::sort(pk.begin(), pk.end());
    for (auto& [_, name] : pk) t.primary_keys.push_back(name);

    sqlite3_reset(fks.get());
    sqlite3_bind_text(fks.get(), 1, t.name.c_str(), -1, SQLITE_TRANSIENT);
    step_all(db, fks.get(), [&] {
      const bool implicit_target = sqlite3_column_type(fks.get(), 2) == SQLITE_NULL;
      t.foreign_keys.push_back({text_at(fks.get(), 1), text_at(fks.get(), 0),
                                implicit_target ? std::string() : text_at(fks.get(), 2)});
    });
  }

  // A REFERENCES clause without a column names the parent's primary key;
  // canonicalise table spelling to the catalog's.
  for (auto& t : schema.tables) {
    for (auto& fk : t.foreign_keys) {
      const auto* parent = schema.find_table(fk.ref_table);
      if (!parent) continue;
      fk.ref_table = parent->name;
      if (fk.ref_column.empty() && !parent->primary_keys.empty()) fk.ref_column = parent->primary_keys.front();
      if (const auto* c = parent->find_column(fk.ref_column)) fk.ref_column = c->name;
    }
  }
  return schema;
}

GroundingExpansion expand_grounding_instances(const std::vector<Task>& tasks,
                                              const std::map<std::string, Schema>& schemas) {
  GroundingExpansion out;
  for (const auto& task : tasks) {
    auto skip = [&](const std::string& why) {
      ++out.skipped;
      out.diagnostics.push_back("task " + task.task_id + ": " + why);
    };
    if (!task.gold_sql) {
      skip("no gold query");
      continue;
    }
    const auto it = schemas.find(task.db_id);
    if (it == schemas.end()) {
      skip("no schema for " + task.db_id);
      continue;
    }
    std::vector<GoldSchemaLabel> labels;
    try {
      labels = extract_gold_schema(*task.gold_sql, it->second);
    } catch (const ParseFailure& e) {
      skip(e.what());
      continue;
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
      out.instances.push_back({task, it->second.tables[i], std::move(labels[i])});
  }
  return out;
}

}  // namespace sqlagent
