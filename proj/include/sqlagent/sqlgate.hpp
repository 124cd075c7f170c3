#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace sqlagent {

/// A single cell. Alternatives mirror the engine's storage classes.
using Value = std::variant<std::monostate, std::int64_t, double, std::string,
                           std::vector<unsigned char>>;
using Row = std::vector<Value>;

/// Read-only connection to an SQLite database file. One per worker; never
/// shared across threads.
class Database {
 public:
  /// Throws CorruptDatabase when the file cannot be opened read-only.
  explicit Database(const std::filesystem::path& path);
  ~Database();

  Database(Database&& other) noexcept;
  Database& operator=(Database&& other) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  sqlite3* handle() const { return db_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  sqlite3* db_ = nullptr;
  std::filesystem::path path_;
};

struct ExecutionResult {
  enum class Status { ok, error };

  Status status = Status::ok;
  std::vector<std::string> column_names;
  std::vector<Row> rows;
  std::optional<std::string> error_message;
  bool truncated = false;

  bool ok() const { return status == Status::ok; }
};

struct ExecOptions {
  /// Row cap for the returned result; nullopt fetches everything.
  std::optional<std::size_t> row_cap;
  std::chrono::milliseconds timeout{30'000};
};

inline constexpr std::size_t kObservationRowCap = 50;

/// Runs one read-only statement. Engine failures, timeouts, write attempts
/// and multi-statement scripts all come back as status = error; this never
/// throws for bad SQL.
ExecutionResult execute(const Database& db, std::string_view sql, const ExecOptions& options = {});

/// Box-table rendering of a result (or "Error: <message>"), with a trailing
/// note when rows were cut at the cap.
std::string render_observation(const ExecutionResult& result);

/// Result equality for execution accuracy. Errors never compare equal.
/// Integer-valued reals fold to integers; everything else is exact. Column
/// names are ignored. Order-insensitive mode compares rows as multisets.
bool results_equal(const ExecutionResult& a, const ExecutionResult& b, bool order_sensitive);

/// Text of a value as the engine itself would print it.
std::string value_text(const Value& value);

}  // namespace sqlagent
