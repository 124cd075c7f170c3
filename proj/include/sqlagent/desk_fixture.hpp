#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sqlagent/core.hpp"
#include "sqlagent/harness.hpp"
#include "sqlagent/policy_client.hpp"

namespace sqlagent {

/// Creates (or replaces) a database file by running an SQL script.
void create_database(const std::filesystem::path& path, const std::string& script);

/// animals(id, species, age, name): 130 rows, 12 of them pigs.
void build_farm_db(const std::filesystem::path& path);
/// frpm / schools in the shape of the California schools data.
void build_school_db(const std::filesystem::path& path);
/// customers / products / orders with foreign keys.
void build_shop_db(const std::filesystem::path& path);

/// A ten-task benchmark over the three toy databases. Six tasks are
/// solvable by the desk policy and four are not.
struct DeskFixture {
  std::filesystem::path root;
  std::filesystem::path db_root;
  std::filesystem::path tasks_path;
  std::vector<Task> tasks;
  std::set<std::string> solvable;
};

DeskFixture write_desk_fixture(const std::filesystem::path& root);

/// Deterministic stand-in for all four agents on the desk benchmark. It
/// recognises the prompt kind and answers from the fixture's ground truth,
/// varying generation behaviour with the candidate seed: correct answers,
/// wrong answers, SQL errors, turn-limit stalls, format violations and a
/// typo-recovery sequence.
std::unique_ptr<PolicyClient> make_desk_policy(const DeskFixture& fixture);

/// Pipeline settings for the desk run: 8 candidates, 5 turns, verifier
/// selection compared against every other strategy.
PipelineConfig desk_pipeline_config(const DeskFixture& fixture, const std::filesystem::path& output_dir);

/// Runs the desk policy through the pipeline once and saves every exchange
/// as a replay script at root/script.json. Returns the script path.
std::filesystem::path record_desk_script(const DeskFixture& fixture);

/// Config file for the CLI pointing at the fixture and its script.
void write_desk_config(const DeskFixture& fixture, const std::filesystem::path& path,
                       const std::filesystem::path& output_dir);

}  // namespace sqlagent
