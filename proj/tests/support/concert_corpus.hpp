#pragma once

// Hand-labelled gold-schema corpus over a four-table concert database.
// Labels were written by reading each query, not by running the extractor.

#include <sqlite3.h>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sqlagent/datasets.hpp"
#include "sqlagent/desk_fixture.hpp"

namespace testing {

inline const char* kConcertDdl = R"sql(
CREATE TABLE stadium (stadium_id INTEGER PRIMARY KEY, name TEXT, location TEXT, capacity INTEGER);
CREATE TABLE singer (singer_id INTEGER PRIMARY KEY, name TEXT, country TEXT, age INTEGER);
CREATE TABLE concert (
  concert_id INTEGER PRIMARY KEY, concert_name TEXT, stadium_id INTEGER REFERENCES stadium(stadium_id), year INTEGER);
CREATE TABLE singer_in_concert (
  concert_id INTEGER REFERENCES concert(concert_id),
  singer_id INTEGER REFERENCES singer(singer_id),
  PRIMARY KEY (concert_id, singer_id));
INSERT INTO stadium VALUES (1, 'Hampden', 'Glasgow', 52000), (2, 'Tynecastle', 'Edinburgh', 20000), (3, 'Glebe', 'Brechin', 900);
INSERT INTO singer VALUES (1, 'Joe', 'France', 52), (2, 'Ana', 'Spain', 24), (3, 'Tim', 'France', 31), (4, 'Liu', 'China', 29);
INSERT INTO concert VALUES (1, 'Spring', 1, 2014), (2, 'Summer', 1, 2015), (3, 'Autumn', 2, 2016);
INSERT INTO singer_in_concert VALUES (1, 1), (1, 2), (2, 1), (3, 3);
)sql";

using Labels = std::map<std::string, std::set<std::string>>;  // relevant table -> columns

struct GoldCase {
  std::string name;
  std::string sql;
  Labels labels;
  /// The engine's authorizer reports only one side of USING/NATURAL join
  /// columns, so those cases are left out of the oracle cross-check.
  bool authorizer_comparable = true;
};

inline const std::vector<GoldCase>& concert_corpus() {
  static const std::vector<GoldCase> cases = {
      {"single table filter", "SELECT name FROM singer WHERE age > 30", {{"singer", {"name", "age"}}}},
      {"two joins through aliases",
       "SELECT s.name, c.concert_name FROM singer AS s JOIN singer_in_concert AS sic ON s.singer_id = sic.singer_id "
       "JOIN concert AS c ON sic.concert_id = c.concert_id",
       {{"singer", {"name", "singer_id"}},
        {"singer_in_concert", {"singer_id", "concert_id"}},
        {"concert", {"concert_name", "concert_id"}}}},
      {"count star only", "SELECT COUNT(*) FROM concert", {{"concert", {}}}},
      {"not in subquery", "SELECT name FROM stadium WHERE stadium_id NOT IN (SELECT stadium_id FROM concert)",
       {{"stadium", {"name", "stadium_id"}}, {"concert", {"stadium_id"}}}},
      {"join with numbered aliases",
       "SELECT T1.name, T2.year FROM stadium AS T1 JOIN concert AS T2 ON T1.stadium_id = T2.stadium_id "
       "WHERE T2.year > 2014",
       {{"stadium", {"name", "stadium_id"}}, {"concert", {"year", "stadium_id"}}}},
      {"group by with order by aggregate", "SELECT country, COUNT(*) FROM singer GROUP BY country ORDER BY COUNT(*) DESC",
       {{"singer", {"country"}}}},
      {"scalar subquery on same table", "SELECT name FROM singer WHERE age = (SELECT MAX(age) FROM singer)",
       {{"singer", {"name", "age"}}}},
      {"star expansion", "SELECT * FROM stadium", {{"stadium", {"stadium_id", "name", "location", "capacity"}}}},
      {"correlated exists",
       "SELECT c.concert_name FROM concert AS c WHERE EXISTS "
       "(SELECT 1 FROM singer_in_concert AS x WHERE x.concert_id = c.concert_id)",
       {{"concert", {"concert_name", "concert_id"}}, {"singer_in_concert", {"concert_id"}}}},
      {"unqualified columns across a join",
       "SELECT concert_name, location FROM concert JOIN stadium ON concert.stadium_id = stadium.stadium_id",
       {{"concert", {"concert_name", "stadium_id"}}, {"stadium", {"location", "stadium_id"}}}},
      {"derived table with computed alias",
       "SELECT t.country FROM (SELECT country, AVG(age) AS a FROM singer GROUP BY country) AS t WHERE t.a > 30",
       {{"singer", {"country", "age"}}}},
      {"common table expression",
       "WITH big AS (SELECT stadium_id FROM stadium WHERE capacity > 5000) "
       "SELECT COUNT(*) FROM concert WHERE stadium_id IN (SELECT stadium_id FROM big)",
       {{"stadium", {"stadium_id", "capacity"}}, {"concert", {"stadium_id"}}}},
      {"union of two tables",
       "SELECT name FROM singer WHERE country = 'France' UNION SELECT name FROM stadium WHERE capacity > 1000",
       {{"singer", {"name", "country"}}, {"stadium", {"name", "capacity"}}}},
      {"join using",
       "SELECT concert_name FROM concert JOIN singer_in_concert USING (concert_id)",
       {{"concert", {"concert_name", "concert_id"}}, {"singer_in_concert", {"concert_id"}}},
       false},
      {"identifier case folding", "select S.NAME from SINGER s where s.Age < 25", {{"singer", {"name", "age"}}}},
      {"order by select alias", "SELECT name, capacity AS cap FROM stadium ORDER BY cap DESC LIMIT 1",
       {{"stadium", {"name", "capacity"}}}},
      {"having over a join",
       "SELECT T2.name FROM singer_in_concert AS T1 JOIN singer AS T2 ON T1.singer_id = T2.singer_id "
       "GROUP BY T1.singer_id HAVING COUNT(*) >= 2",
       {{"singer_in_concert", {"singer_id"}}, {"singer", {"name", "singer_id"}}}},
      {"subquery in select list",
       "SELECT concert_name, (SELECT COUNT(*) FROM singer_in_concert AS x WHERE x.concert_id = concert.concert_id) "
       "FROM concert",
       {{"concert", {"concert_name", "concert_id"}}, {"singer_in_concert", {"concert_id"}}}},
      {"self join",
       "SELECT a.name FROM singer AS a JOIN singer AS b ON a.country = b.country "
       "WHERE b.name = 'Joe' AND a.singer_id <> b.singer_id",
       {{"singer", {"name", "country", "singer_id"}}}},
      {"left join with case",
       "SELECT s.name, CASE WHEN x.concert_id IS NULL THEN 'none' ELSE 'some' END "
       "FROM singer AS s LEFT JOIN singer_in_concert AS x ON x.singer_id = s.singer_id",
       {{"singer", {"name", "singer_id"}}, {"singer_in_concert", {"concert_id", "singer_id"}}}},
  };
  return cases;
}

inline void build_concert_db(const std::filesystem::path& path) { sqlagent::create_database(path, kConcertDdl); }

/// Tables and columns the engine's authorizer sees while compiling `sql`.
/// Column names come back as declared in the schema.
inline Labels authorizer_references(const std::filesystem::path& db_path, const std::string& sql) {
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(db_path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
    sqlite3_close(db);
    throw std::runtime_error("cannot open " + db_path.string());
  }
  Labels seen;
  sqlite3_set_authorizer(
      db,
      [](void* user, int action, const char* table, const char* column, const char*, const char*) {
        if (action == SQLITE_READ && table != nullptr && std::string(table).rfind("sqlite_", 0) != 0) {
          auto& entry = (*static_cast<Labels*>(user))[table];
          if (column != nullptr && *column != '\0') entry.insert(column);
        }
        return SQLITE_OK;
      },
      &seen);
  sqlite3_stmt* stmt = nullptr;
  const int rc = sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr);
  const std::string err = rc == SQLITE_OK ? "" : sqlite3_errmsg(db);
  sqlite3_finalize(stmt);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw std::runtime_error("prepare failed: " + err);
  return seen;
}

/// Labels as produced by extract_gold_schema, relevant tables only.
inline Labels relevant_of(const std::vector<sqlagent::GoldSchemaLabel>& labels) {
  Labels out;
  for (const auto& l : labels)
    if (l.relevant) out[l.table] = l.gold_columns;
  return out;
}

}  // namespace testing
