#include "sqlagent/desk_fixture.hpp"

#include <sqlite3.h>
#include <fmt/format.h>

#include <array>
#include <map>

#include "sqlagent/datasets.hpp"
#include "sqlagent/grounding.hpp"

namespace sqlagent {

namespace fs = std::filesystem;

void create_database(const fs::path& path, const std::string& script) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::remove(path);
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw CorruptDatabase("cannot create " + path.string() + ": " + msg);
  }
  char* err = nullptr;
  if (sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db);
    throw CorruptDatabase("cannot populate " + path.string() + ": " + msg);
  }
  sqlite3_close(db);
}

void build_farm_db(const fs::path& path) {
  static constexpr std::array<const char*, 5> kOthers{"cow", "sheep", "chicken", "goat", "horse"};
  std::string sql =
      "BEGIN;\n"
      "CREATE TABLE animals (id INTEGER PRIMARY KEY, species TEXT, age INTEGER, name TEXT);\n";
  for (int id = 1; id <= 130; ++id) {
    const std::string species = (id % 10 == 0 && id <= 120) ? "pig" : kOthers[static_cast<std::size_t>(id) % 5];
    sql += fmt::format("INSERT INTO animals VALUES ({}, '{}', {}, '{}_{}');\n", id, species, (id * 7) % 15 + 1,
                       species, id);
  }
  sql += "COMMIT;\n";
  create_database(path, sql);
}

void build_school_db(const fs::path& path) {
  create_database(path, R"sql(BEGIN;
CREATE TABLE frpm (
  CDSCode TEXT PRIMARY KEY REFERENCES schools (CDSCode),
  "County Name" TEXT,
  "District Name" TEXT,
  "School Name" TEXT,
  "Enrollment (K-12)" REAL,
  "Free Meal Count (K-12)" REAL
);
CREATE TABLE schools (
  CDSCode TEXT PRIMARY KEY,
  City TEXT,
  Zip TEXT,
  Charter INTEGER,
  FundingType TEXT
);
INSERT INTO frpm VALUES
  ('01611190130229', 'Alameda', 'Oakland Unified', 'Lincoln Elementary', 420, 310),
  ('01611190130237', 'Alameda', 'Oakland Unified', 'Garfield Elementary', 510, 402),
  ('01611190130245', 'Alameda', 'Oakland Unified', 'Oakland Technical High', 1800, 900),
  ('01611430131177', 'Alameda', 'Berkeley Unified', 'Berkeley High', 3100, 800),
  ('01611430131185', 'Alameda', 'Berkeley Unified', 'Rosa Parks Elementary', 380, 150),
  ('10621660000001', 'Fresno', 'Fresno Unified', 'Roosevelt High', 2000, 1700),
  ('10621660000002', 'Fresno', 'Fresno Unified', 'Edison High', 1900, 1300),
  ('10621660000003', 'Fresno', 'Clovis Unified', 'Clovis West High', 2200, 500),
  ('19647330000001', 'Los Angeles', 'Los Angeles Unified', 'Garfield High', 2500, 2100),
  ('19647330000002', 'Los Angeles', 'Los Angeles Unified', 'Hollywood High', 1700, 1100),
  ('19647330000003', 'Los Angeles', 'Pasadena Unified', 'Blair High', 900, 450),
  ('19647330000004', 'Los Angeles', 'Los Angeles Unified', 'Venice High', 2300, 1200);
INSERT INTO schools VALUES
  ('01611190130229', 'Oakland', '94601', 1, 'Directly funded'),
  ('01611190130237', 'Oakland', '94606', 0, NULL),
  ('01611190130245', 'Oakland', '94609', 0, NULL),
  ('01611430131177', 'Berkeley', '94704', 0, NULL),
  ('01611430131185', 'Berkeley', '94702', 1, 'Locally funded'),
  ('10621660000001', 'Fresno', '93701', 0, NULL),
  ('10621660000002', 'Fresno', '93706', 1, 'Directly funded'),
  ('10621660000003', 'Clovis', '93611', 0, NULL),
  ('19647330000001', 'Los Angeles', '90022', 0, NULL),
  ('19647330000002', 'Los Angeles', '90028', 1, 'Directly funded'),
  ('19647330000003', 'Pasadena', '91103', 0, NULL),
  ('19647330000004', 'Venice', '90291', 0, NULL);
COMMIT;
)sql");
}

void build_shop_db(const fs::path& path) {
  std::string sql = R"sql(BEGIN;
CREATE TABLE customers (id INTEGER PRIMARY KEY, name TEXT, city TEXT);
CREATE TABLE products (id INTEGER PRIMARY KEY, name TEXT, category TEXT, price REAL);
CREATE TABLE orders (
  id INTEGER PRIMARY KEY,
  customer_id INTEGER REFERENCES customers (id),
  product_id INTEGER REFERENCES products (id),
  quantity INTEGER,
  order_date TEXT
);
INSERT INTO customers VALUES
  (1, 'Alice', 'Paris'), (2, 'Bruno', 'Lyon'), (3, 'Chloe', 'Paris'),
  (4, 'Dmitri', 'Berlin'), (5, 'Elena', 'Madrid'), (6, 'Farid', 'Paris');
INSERT INTO products VALUES
  (1, 'hammer', 'tools', 12.5), (2, 'wrench', 'tools', 8.0), (3, 'lamp', 'home', 30.0),
  (4, 'mug', 'home', 4.5), (5, 'drill', 'tools', 55.0), (6, 'kettle', 'home', 22.0);
)sql";
  for (int id = 1; id <= 20; ++id) {
    sql += fmt::format("INSERT INTO orders VALUES ({}, {}, {}, {}, '2024-01-{:02}');\n", id, (id * 5) % 6 + 1,
                       (id * 7) % 6 + 1, id % 4 + 1 + (id == 9 ? 3 : 0), id);
  }
  sql += "COMMIT;\n";
  create_database(path, sql);
}

// ---------------------------------------------------------------------------

namespace {

struct DeskTask {
  int id;
  const char* db;
  const char* question;
  const char* evidence;  // may be empty
  const char* gold;
  bool solvable;
  int offset;  // rotates the behaviour pattern across candidates
  const char* explore;
  const char* broken;
  std::vector<std::string> correct;  // alternative correct answers (solvable only)
  std::vector<std::string> wrong;    // valid but wrong answers
};

const std::vector<DeskTask>& desk_tasks() {
  static const std::vector<DeskTask> tasks{
      {0, "farm", "How many pigs are in the farm?", "", "SELECT COUNT(*) FROM animals WHERE species = 'pig';", true,
       0, "SELECT DISTINCT species FROM animals;", "SELECT COUNT(*) FROM animal WHERE species = 'pig';",
       {"SELECT COUNT(*) FROM animals WHERE species = 'pig';", "SELECT COUNT(id) FROM animals WHERE species = 'pig';"},
       {"SELECT COUNT(*) FROM animals;", "SELECT COUNT(*) FROM animals WHERE species = 'pigs';"}},
      {1, "farm", "What is the average age of the goats?", "", "SELECT AVG(age) FROM animals WHERE species = 'goat'",
       true, 1, "SELECT * FROM animals WHERE species = 'goat' LIMIT 5;", "SELECT AVG(agee) FROM animals;",
       {"SELECT AVG(age) FROM animals WHERE species = 'goat';",
        "SELECT AVG(a.age) FROM animals AS a WHERE a.species = 'goat';"},
       {"SELECT AVG(age) FROM animals;", "SELECT MAX(age) FROM animals WHERE species = 'goat';"}},
      {2, "farm", "List the names of the five oldest horses, oldest first.", "",
       "SELECT name FROM animals WHERE species = 'horse' ORDER BY age DESC, id LIMIT 5", false, 3,
       "SELECT name, age FROM animals WHERE species = 'horse' LIMIT 10;",
       "SELECT name FROM animals WHERE species = horse ORDER BY age DESC LIMIT 5;",
       {},
       {"SELECT name FROM animals WHERE species = 'horse' ORDER BY age LIMIT 5;",
        "SELECT name FROM animals WHERE species = 'horse' ORDER BY age DESC, id LIMIT 3;"}},
      {3, "school", "What is the free meal count of the schools in the Oakland Unified district?",
       "Oakland Unified refers to the District Name", "SELECT \"Free Meal Count (K-12)\" FROM frpm WHERE \"District Name\" = 'Oakland Unified'",
       true, 0, "SELECT DISTINCT \"District Name\" FROM frpm;",
       "SELECT \"Free Meal Count (K-12)\" FROM fprm WHERE \"District Name\" = 'Oakland Unified';",
       {"SELECT \"Free Meal Count (K-12)\" FROM frpm WHERE \"District Name\" = 'Oakland Unified';",
        "SELECT f.\"Free Meal Count (K-12)\" FROM frpm AS f WHERE f.\"District Name\" = 'Oakland Unified';"},
       {"SELECT \"Free Meal Count (K-12)\" FROM frpm WHERE \"County Name\" = 'Alameda';",
        "SELECT SUM(\"Free Meal Count (K-12)\") FROM frpm WHERE \"District Name\" = 'Oakland Unified';"}},
      {4, "school", "Which city has the most schools?", "",
       "SELECT City FROM schools GROUP BY City ORDER BY COUNT(*) DESC LIMIT 1", true, 7,
       "SELECT City, COUNT(*) FROM schools GROUP BY City;", "SELECT City FROM school GROUP BY City;",
       {"SELECT City FROM schools GROUP BY City ORDER BY COUNT(*) DESC LIMIT 1;",
        "SELECT City FROM schools GROUP BY City ORDER BY COUNT(CDSCode) DESC LIMIT 1;"},
       {"SELECT City FROM schools GROUP BY City ORDER BY COUNT(*) ASC LIMIT 1;",
        "SELECT City FROM schools ORDER BY City LIMIT 1;"}},
      {5, "school", "What is the highest free meal rate among schools in Fresno county?",
       "free meal rate = Free Meal Count (K-12) / Enrollment (K-12)",
       "SELECT MAX(\"Free Meal Count (K-12)\" / \"Enrollment (K-12)\") FROM frpm WHERE \"County Name\" = 'Fresno'",
       false, 5, "SELECT \"School Name\", \"County Name\" FROM frpm WHERE \"County Name\" = 'Fresno';",
       "SELECT MAX(rate) FROM frpm WHERE \"County Name\" = 'Fresno';",
       {},
       {"SELECT MAX(\"Free Meal Count (K-12)\") FROM frpm WHERE \"County Name\" = 'Fresno';",
        "SELECT AVG(\"Free Meal Count (K-12)\" / \"Enrollment (K-12)\") FROM frpm WHERE \"County Name\" = 'Fresno';"}},
      {6, "school", "How many charter schools are in Alameda county?", "charter schools refers to Charter = 1",
       "SELECT COUNT(*) FROM schools AS s JOIN frpm AS f ON s.CDSCode = f.CDSCode WHERE f.\"County Name\" = 'Alameda' AND s.Charter = 1",
       true, 6, "SELECT Charter, COUNT(*) FROM schools GROUP BY Charter;",
       "SELECT COUNT(*) FROM schools WHERE County = 'Alameda' AND Charter = 1;",
       {"SELECT COUNT(*) FROM schools AS s JOIN frpm AS f ON s.CDSCode = f.CDSCode WHERE f.\"County Name\" = 'Alameda' AND s.Charter = 1;",
        "SELECT COUNT(*) FROM frpm JOIN schools USING (CDSCode) WHERE \"County Name\" = 'Alameda' AND Charter = 1;"},
       {"SELECT COUNT(*) FROM schools WHERE Charter = 1;",
        "SELECT COUNT(*) FROM frpm WHERE \"County Name\" = 'Alameda';"}},
      {7, "shop", "How many orders did customers from Paris place?", "",
       "SELECT COUNT(*) FROM orders AS o JOIN customers AS c ON o.customer_id = c.id WHERE c.city = 'Paris'", true, 4,
       "SELECT id, name, city FROM customers;", "SELECT COUNT(*) FROM orders WHERE city = 'Paris';",
       {"SELECT COUNT(*) FROM orders AS o JOIN customers AS c ON o.customer_id = c.id WHERE c.city = 'Paris';",
        "SELECT COUNT(*) FROM orders WHERE customer_id IN (SELECT id FROM customers WHERE city = 'Paris');"},
       {"SELECT COUNT(*) FROM customers WHERE city = 'Paris';", "SELECT COUNT(*) FROM orders;"}},
      {8, "shop", "What is the total revenue from products in the tools category?",
       "revenue = quantity * price",
       "SELECT SUM(o.quantity * p.price) FROM orders AS o JOIN products AS p ON o.product_id = p.id WHERE p.category = 'tools'",
       false, 2, "SELECT DISTINCT category FROM products;", "SELECT SUM(revenue) FROM orders;",
       {},
       {"SELECT SUM(o.quantity) FROM orders AS o JOIN products AS p ON o.product_id = p.id WHERE p.category = 'tools';",
        "SELECT SUM(p.price) FROM orders AS o JOIN products AS p ON o.product_id = p.id WHERE p.category = 'tools';"}},
      {9, "shop", "Which customer bought the most units overall?", "",
       "SELECT c.name FROM customers AS c JOIN orders AS o ON o.customer_id = c.id GROUP BY c.id ORDER BY SUM(o.quantity) DESC LIMIT 1",
       false, 1, "SELECT customer_id, quantity FROM orders LIMIT 10;",
       "SELECT name FROM customers ORDER BY SUM(quantity) DESC LIMIT 1;",
       {},
       {"SELECT c.name FROM customers AS c JOIN orders AS o ON o.customer_id = c.id GROUP BY c.id ORDER BY COUNT(*) DESC LIMIT 1;",
        "SELECT c.name FROM customers AS c JOIN orders AS o ON o.customer_id = c.id GROUP BY c.id ORDER BY SUM(o.quantity) ASC LIMIT 1;"}},
  };
  return tasks;
}

std::string think_sql(const std::string& thought, const std::string& sql) {
  return "<think>" + thought + "</think>\n<SQL>" + sql + "</SQL>";
}

std::string think_solution(const std::string& thought, const std::string& sql) {
  return "<think>" + thought + "</think>\n<solution>" + sql + "</solution>";
}

/// Completions for candidate pattern k of a task, indexed by how many
/// assistant messages the transcript already holds.
std::vector<std::string> generation_script(const DeskTask& t, int k) {
  const auto& answers = t.solvable ? t.correct : t.wrong;
  const std::string fence = "```sql\n" + answers[0] + "\n```";
  switch (k) {
    case 0:
      if (t.id == 3) {
        return {
            think_sql("I need the free meal counts for Oakland Unified. I will filter the frpm table by county.",
                      "SELECT \"Free Meal Count (K-12)\" FROM fprm WHERE \"County Name\" = 'Oakland Unified';"),
            think_sql("The table name fprm is a typo, the table is frpm. Retrying with the right name.",
                      "SELECT \"Free Meal Count (K-12)\" FROM frpm WHERE \"County Name\" = 'Oakland Unified';"),
            think_sql("The result is empty. Oakland Unified is a district, not a county, so I should filter on "
                      "District Name.",
                      "SELECT \"Free Meal Count (K-12)\" FROM frpm WHERE \"District Name\" = 'Oakland Unified';"),
            think_solution("The district filter returns the free meal counts, so this is the final query.",
                           answers[0]),
        };
      }
      return {think_sql("Let me look at the data first.", t.explore),
              think_solution("The data looks as expected, so I can answer directly.", answers[0])};
    case 1:
      return {think_solution("The schema makes the answer straightforward.", answers[0])};
    case 2:
      return {think_sql("Exploring the relevant rows.", t.explore) +
                  "\n<observation>\n(imagined result)\n</observation>",
              think_solution("Based on that, here is my answer.", t.wrong[0])};
    case 3:
      return {think_sql("Trying a direct query.", t.broken),
              think_solution("I will keep the same query as the answer.", t.broken)};
    case 4:
      return {think_sql("I am still exploring the data.", t.explore)};
    case 5:
      return {fence, fence};
    case 6:
      return {fence, think_solution("Using the required tags this time.", answers[answers.size() > 1 ? 1 : 0])};
    default:
      return {think_solution("Answering in one step.", t.wrong[t.wrong.size() > 1 ? 1 : 0])};
  }
}

std::string between(const std::string& text, const std::string& open, const std::string& close,
                    std::size_t from = 0) {
  const auto a = text.find(open, from);
  if (a == std::string::npos) return {};
  const auto b = text.find(close, a + open.size());
  if (b == std::string::npos) return {};
  return text.substr(a + open.size(), b - a - open.size());
}

std::string normalise(std::string_view sql) {
  auto s = std::string(trim(sql));
  while (!s.empty() && (s.back() == ';' || std::isspace(static_cast<unsigned char>(s.back())))) s.pop_back();
  return s;
}

class DeskPolicy final : public PolicyClient {
 public:
  explicit DeskPolicy(const DeskFixture& fx) {
    std::map<std::string, Schema> schemas;
    for (const auto& t : desk_tasks()) {
      if (!schemas.contains(t.db)) {
        Database db(database_path(fx.db_root, t.db));
        schemas.emplace(t.db, introspect_schema(db, t.db));
      }
      by_question_.emplace(t.question, &t);
      labels_[t.id] = extract_gold_schema(t.gold, schemas.at(t.db));
    }
  }

  CompletionResponse complete(const CompletionRequest& req) override {
    if (req.transcript.empty()) throw BackendContract("empty transcript");
    const auto& prompt = req.transcript.front().text;
    if (prompt.find("table level schema linking") != std::string::npos) return ground(prompt);
    if (prompt.find("You are a data science expert") != std::string::npos) return generate(req);
    if (prompt.find("verify if a proposed solution") != std::string::npos) return verify(req, prompt);
    if (prompt.find("select the BEST SQL query") != std::string::npos) return judge(prompt);
    throw BackendContract("desk policy does not recognise the prompt");
  }

 private:
  const DeskTask& task_for(const std::string& question) const {
    const auto it = by_question_.find(question);
    if (it == by_question_.end()) throw BackendContract("desk policy has no task for question: " + question);
    return *it->second;
  }

  CompletionResponse ground(const std::string& prompt) const {
    const auto& t = task_for(between(prompt, "### User Question:\n", "\n### External Knowledge"));
    const auto table = between(prompt, "### Table Information:\nTable: ", "\n");
    const GoldSchemaLabel* label = nullptr;
    for (const auto& l : labels_.at(t.id))
      if (l.table == table) label = &l;
    if (!label) throw BackendContract("desk policy has no label for table " + table);

    bool relevant = label->relevant;
    std::vector<std::string> columns(label->gold_columns.begin(), label->gold_columns.end());
    if (t.id == 7) relevant = false;  // drops every table: exercises the full-schema fallback
    if (t.id == 5 && !relevant) {
      relevant = true;
      columns = {"City"};
    }
    if (t.id % 3 == 0 && relevant && t.id != 7) columns.push_back("id_extra");
    std::string answer = relevant ? "Y\n[" : "N";
    if (relevant) {
      for (std::size_t i = 0; i < columns.size(); ++i) answer += (i ? ", \"" : "\"") + columns[i] + "\"";
      answer += "]";
    }
    return {"The question concerns " + table + ".</think>\n<answer>\n" + answer + "\n</answer>", std::nullopt,
            FinishReason::stop};
  }

  CompletionResponse generate(const CompletionRequest& req) const {
    const auto& prompt = req.transcript.front().text;
    const auto& t = task_for(between(prompt, "\nQuestion:\n", "\n\n"));
    std::size_t step = 0;
    for (const auto& m : req.transcript) step += m.role == Role::assistant ? 1 : 0;
    const bool hinted = prompt.find("Reference SQL (known to be correct") != std::string::npos;
    if (hinted) return {think_solution("Following the reference query.", t.gold), std::nullopt, FinishReason::stop};

    const auto c = req.sampling.seed.value_or(0);
    const int k = static_cast<int>(((c + t.offset) % 8 + 8) % 8);
    const auto script = generation_script(t, k);
    return {script[std::min(step, script.size() - 1)], std::nullopt, FinishReason::stop};
  }

  bool is_correct(const DeskTask& t, const std::string& sql) const {
    const auto s = normalise(sql);
    if (s == normalise(t.gold)) return true;
    for (const auto& c : t.correct)
      if (s == normalise(c)) return true;
    return false;
  }

  CompletionResponse verify(const CompletionRequest& req, const std::string& prompt) const {
    const auto& t = task_for(between(prompt, "Problem:\n", "\n\nExternal Knowledge:"));
    const auto solution_at = prompt.find("Proposed Solution:\n");
    const auto sql = between(prompt, "<solution>", "</solution>", solution_at);
    const auto wobble = 0.01 * static_cast<double>(req.sampling.seed.value_or(0) % 4);
    double p = 0.04 + wobble;
    if (!sql.empty()) p = is_correct(t, sql) ? 0.82 + wobble : 0.25 - wobble;
    TokenDistribution dist{{"Yes", p - 0.02}, {" yes", 0.02}, {"No", 1.0 - p}};
    return {p >= 0.5 ? "Yes" : "No", dist, FinishReason::stop};
  }

  CompletionResponse judge(const std::string& prompt) const {
    const auto& t = task_for(between(prompt, "Here is the user's question:\n", "\n\nEvaluate"));
    for (std::size_t i = 0;; ++i) {
      const auto at = prompt.find("Candidate " + std::to_string(i) + ":\n");
      if (at == std::string::npos) break;
      const auto sql = between(prompt, "SQL:\n", "\nExecution Observation:", at);
      if (!sql.empty() && is_correct(t, sql)) return {std::to_string(i), std::nullopt, FinishReason::stop};
    }
    return {"None of the candidates answers the question.", std::nullopt, FinishReason::stop};
  }

  std::map<std::string, const DeskTask*> by_question_;
  std::map<int, std::vector<GoldSchemaLabel>> labels_;
};

}  // namespace

DeskFixture write_desk_fixture(const fs::path& root) {
  DeskFixture fx;
  fx.root = root;
  fx.db_root = root / "databases";
  fx.tasks_path = root / "tasks.json";
  fs::create_directories(fx.db_root);
  build_farm_db(database_path(fx.db_root, "farm"));
  build_school_db(database_path(fx.db_root, "school"));
  build_shop_db(database_path(fx.db_root, "shop"));

  auto records = nlohmann::json::array();
  for (const auto& t : desk_tasks()) {
    nlohmann::json r{{"question_id", t.id}, {"db_id", t.db}, {"question", t.question}, {"SQL", t.gold}};
    if (*t.evidence) r["evidence"] = t.evidence;
    records.push_back(r);
    Task task{std::to_string(t.id), t.question, t.db, std::nullopt, t.gold};
    if (*t.evidence) task.external_knowledge = t.evidence;
    fx.tasks.push_back(task);
    if (t.solvable) fx.solvable.insert(task.task_id);
  }
  write_file(fx.tasks_path, records.dump(2) + "\n");
  return fx;
}

std::unique_ptr<PolicyClient> make_desk_policy(const DeskFixture& fixture) {
  return std::make_unique<DeskPolicy>(fixture);
}

PipelineConfig desk_pipeline_config(const DeskFixture& fixture, const fs::path& output_dir) {
  PipelineConfig cfg;
  cfg.tasks_path = fixture.tasks_path;
  cfg.db_root = fixture.db_root;
  cfg.output_dir = output_dir;
  cfg.backend = "mock:" + (fixture.root / "script.json").string();
  cfg.candidates = 8;
  cfg.episode.max_turns = 5;
  cfg.selection = Strategy::verifier;
  cfg.compare = {Strategy::self_consistency, Strategy::llm_judge, Strategy::first};
  cfg.pass_at = {1, 4, 8};
  return cfg;
}

fs::path record_desk_script(const DeskFixture& fixture) {
  auto policy = make_desk_policy(fixture);
  RecordingPolicy recorder(*policy);
  const auto scratch = fixture.root / "recording";
  fs::remove_all(scratch);
  auto cfg = desk_pipeline_config(fixture, scratch);
  cfg.grounding = true;
  run_pipeline(cfg, Backends{&recorder, &recorder, &recorder, &recorder});
  // The grounding-free arm issues different generation prompts.
  fs::remove_all(scratch);
  cfg.grounding = false;
  run_pipeline(cfg, Backends{&recorder, &recorder, &recorder, &recorder});
  fs::remove_all(scratch);

  const auto path = fixture.root / "script.json";
  save_script(recorder.script(), path);
  return path;
}

void write_desk_config(const DeskFixture& fixture, const fs::path& path, const fs::path& output_dir) {
  const auto cfg = desk_pipeline_config(fixture, output_dir);
  std::string out;
  out += fmt::format("tasks = \"{}\"\n", cfg.tasks_path.string());
  out += fmt::format("db-root = \"{}\"\n", cfg.db_root.string());
  out += fmt::format("out = \"{}\"\n", cfg.output_dir.string());
  out += fmt::format("backend = \"{}\"\n", cfg.backend);
  out += fmt::format("candidates = {}\n", cfg.candidates);
  out += fmt::format("max-turns = {}\n", cfg.episode.max_turns);
  out += "selection = \"verifier\"\n";
  out += "compare = [\"self_consistency\", \"llm_judge\", \"first\"]\n";
  out += "pass-at = [1, 4, 8]\n";
  write_file(path, out);
}

}  // namespace sqlagent
