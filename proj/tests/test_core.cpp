#include "doctest.h"
#include "sqlagent/core.hpp"
#include "sqlagent/errors.hpp"

using namespace sqlagent;

TEST_CASE("agent turn with an action") {
  const auto p = parse_agent_turn(
      "<think>count pigs</think><SQL>SELECT COUNT(*) FROM animals WHERE species = 'pig';</SQL>");
  const auto* turn = std::get_if<Turn>(&p.step);
  REQUIRE(turn != nullptr);
  CHECK(turn->thought == "count pigs");
  CHECK(turn->action_sql == "SELECT COUNT(*) FROM animals WHERE species = 'pig';");
  CHECK_FALSE(turn->observation.has_value());
}

TEST_CASE("terminal turn") {
  const auto p = parse_agent_turn("<think>done</think><solution>SELECT 1;</solution>");
  const auto* t = std::get_if<Terminal>(&p.step);
  REQUIRE(t != nullptr);
  CHECK(t->thought == "done");
  CHECK(t->solution_sql == "SELECT 1;");
}

TEST_CASE("fenced SQL is a protocol error") {
  CHECK_THROWS_AS(parse_agent_turn("```sql\nSELECT 1;\n```"), ProtocolError);
  CHECK_THROWS_AS(parse_agent_turn("<think>x</think>\n```sql\nSELECT 1;\n```"), ProtocolError);
}

TEST_CASE("malformed turns") {
  CHECK_THROWS_AS(parse_agent_turn("<SQL>SELECT 1</SQL>"), ProtocolError);
  CHECK_THROWS_AS(parse_agent_turn("<think>only thinking</think>"), ProtocolError);
  CHECK_THROWS_AS(parse_agent_turn("<think>  </think><sql>SELECT 1</sql>"), ProtocolError);
  CHECK_THROWS_AS(parse_agent_turn("<think>x</think><sql>   </sql>"), ProtocolError);
  CHECK_THROWS_AS(parse_agent_turn("<think>x</think><sql>SELECT 1"), ProtocolError);
}

TEST_CASE("solution wins over sql and the first blocks are taken") {
  const auto p = parse_agent_turn(
      "<think>a</think><sql>SELECT 2</sql><solution>SELECT 3</solution><solution>SELECT 4</solution>");
  const auto* t = std::get_if<Terminal>(&p.step);
  REQUIRE(t != nullptr);
  CHECK(t->solution_sql == "SELECT 3");
}

TEST_CASE("trailing self-authored observation is outside the extent") {
  const std::string raw =
      "<think>look</think>\n<sql>SELECT 1</sql>\n<observation>\nfake\n</observation>\n<think>more</think>";
  const auto p = parse_agent_turn(raw);
  CHECK(raw.substr(0, p.extent) == "<think>look</think>\n<sql>SELECT 1</sql>");
  CHECK(std::get<Turn>(p.step).action_sql == "SELECT 1");
}

TEST_CASE("sql tag case and whitespace") {
  const auto p = parse_agent_turn("  <think>\n  t \n</think>\n<Sql>\n  SELECT a FROM b \n</Sql>");
  const auto& turn = std::get<Turn>(p.step);
  CHECK(turn.thought == "t");
  CHECK(turn.action_sql == "SELECT a FROM b");
}

TEST_CASE("render then parse reproduces turns") {
  const Turn t{"check the table", "SELECT * FROM t WHERE x < 3", std::nullopt};
  CHECK(std::get<Turn>(parse_agent_turn(render_turn(t)).step) == t);
  const Terminal f{"finish", "SELECT 1"};
  CHECK(std::get<Terminal>(parse_agent_turn(render_terminal(f)).step) == f);
}

TEST_CASE("grounding answers") {
  auto d = parse_grounding_answer("<answer>\nY\n[\"player_name\", \"team_name\", \"matches_played\"]\n</answer>");
  CHECK(d.valid_format);
  CHECK(d.decision == Decision::Y);
  CHECK(d.columns == std::vector<std::string>{"player_name", "team_name", "matches_played"});

  d = parse_grounding_answer("<answer>\nN\n</answer>");
  CHECK(d.valid_format);
  CHECK(d.decision == Decision::N);
  CHECK(d.columns.empty());

  CHECK_FALSE(parse_grounding_answer("<answer>Maybe</answer>").valid_format);
  CHECK_FALSE(parse_grounding_answer("Y [\"a\"]").valid_format);
  CHECK_FALSE(parse_grounding_answer("<answer>Y</answer>").valid_format);
  CHECK_FALSE(parse_grounding_answer("<answer>Y [[\"a\"]]</answer>").valid_format);
  CHECK_FALSE(parse_grounding_answer("<answer>Y [\"a\" \"b\"]</answer>").valid_format);
}

TEST_CASE("column list literal grammar") {
  auto d = parse_grounding_answer("<think>...</think><answer> Y ['a',\"b\" ,  'c d', ] </answer>");
  REQUIRE(d.valid_format);
  CHECK(d.columns == std::vector<std::string>{"a", "b", "c d"});
  d = parse_grounding_answer("<answer>Y\n[]\n</answer>");
  CHECK(d.valid_format);
  CHECK(d.columns.empty());
}

TEST_CASE("verifier verdicts") {
  CHECK(parse_verifier_verdict("Yes, the join is correct.") == Verdict::Yes);
  CHECK(parse_verifier_verdict("no") == Verdict::No);
  CHECK(parse_verifier_verdict("  \n**NO**") == Verdict::No);
  CHECK(parse_verifier_verdict("The query is fine.") == Verdict::Invalid);
  CHECK(parse_verifier_verdict("Yesterday") == Verdict::Invalid);
  CHECK(parse_verifier_verdict("") == Verdict::Invalid);
}

TEST_CASE("trajectory rendering includes observations") {
  Trajectory t;
  t.turns.push_back({"look", "SELECT 1", "+---+\n| 1 |\n+---+"});
  t.final_thought = "done";
  t.solution_sql = "SELECT 1";
  t.termination = Termination::solved;
  CHECK(render_trajectory(t) ==
        "<think>look</think>\n<sql>SELECT 1</sql>\n<observation>\n+---+\n| 1 |\n+---+\n</observation>\n"
        "<think>done</think>\n<solution>SELECT 1</solution>");
}

TEST_CASE("trajectory jsonl round trip") {
  Trajectory a;
  a.task_id = "7";
  a.candidate_index = 2;
  a.turns.push_back({"t1", "SELECT \"x\"\nFROM y", "Error: no such table: y"});
  a.final_thought = "ok";
  a.solution_sql = "SELECT 0.1 + 0.2";
  a.reward = -1.0;
  a.termination = Termination::solved;
  Trajectory b;
  b.task_id = "8";
  b.termination = Termination::protocol_error;

  const auto text = trajectories_to_jsonl({a, b});
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  const auto back = trajectories_from_jsonl(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(trajectories_to_jsonl(back) == text);

  const auto j = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(j.at("turns")[0].at("sql") == "SELECT \"x\"\nFROM y");
  CHECK(j.at("solution") == "SELECT 0.1 + 0.2");
  CHECK(j.at("termination") == "solved");
}

TEST_CASE("malformed trajectory records") {
  CHECK_THROWS_AS(trajectories_from_jsonl("{not json}\n"), MalformedRecord);
  CHECK_THROWS_AS(trajectories_from_jsonl("{\"task_id\": 3}\n"), MalformedRecord);
  CHECK(trajectories_from_jsonl("\n\n").empty());
}

TEST_CASE("grouping keeps task order and sorts candidates") {
  std::vector<Trajectory> ts(4);
  ts[0].task_id = "b", ts[0].candidate_index = 1;
  ts[1].task_id = "a", ts[1].candidate_index = 0;
  ts[2].task_id = "b", ts[2].candidate_index = 0;
  ts[3].task_id = "a", ts[3].candidate_index = 1;
  const auto sets = group_candidates(ts);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].task_id == "b");
  CHECK(sets[0].candidates[0].candidate_index == 0);
  CHECK(sets[1].task_id == "a");
}

TEST_CASE("schema validation") {
  Schema s{"db", {TableDef{"t", {{"id", "INTEGER"}, {"x", "TEXT"}}, {"id"}, {}}}};
  CHECK_NOTHROW(s.validate());
  CHECK(s.find_table("T") != nullptr);
  CHECK(s.tables[0].find_column("X") != nullptr);
  CHECK(s.tables[0].is_key_column("ID"));

  auto dup = s;
  dup.tables[0].columns.push_back({"X", ""});
  CHECK_THROWS_AS(dup.validate(), ConfigError);
  auto bad_pk = s;
  bad_pk.tables[0].primary_keys = {"nope"};
  CHECK_THROWS_AS(bad_pk.validate(), ConfigError);
  auto dangling = s;
  dangling.tables[0].foreign_keys.push_back({"x", "other", "id"});
  CHECK_THROWS_AS(dangling.validate(), ConfigError);
}

TEST_CASE("candidate set validation") {
  CandidateSet set;
  set.candidates.resize(2);
  set.scores = std::vector<double>{0.1};
  CHECK_THROWS_AS(set.validate(), ConfigError);
  set.scores = std::vector<double>{0.1, 0.2};
  set.selected_index = 2;
  CHECK_THROWS_AS(set.validate(), ConfigError);
  set.selected_index = 1;
  CHECK_NOTHROW(set.validate());
}
