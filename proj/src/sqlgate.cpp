#include "sqlagent/sqlgate.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "sqlagent/core.hpp"
#include "sqlagent/errors.hpp"

namespace sqlagent {

Database::Database(const std::filesystem::path& path) : path_(path) {
  if (!std::filesystem::exists(path))
    throw CorruptDatabase("database file not found: " + path.string());
  const int flags = SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX;
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw CorruptDatabase("cannot open " + path.string() + ": " + msg);
  }
  sqlite3_exec(db_, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);
  // Reading the catalog forces the header check, so a non-database file
  // fails here rather than on the first query.
  char* err = nullptr;
  if (sqlite3_exec(db_, "SELECT count(*) FROM sqlite_master", nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db_);
    db_ = nullptr;
    throw CorruptDatabase("cannot read " + path.string() + ": " + msg);
  }
}

Database::~Database() {
  if (db_) sqlite3_close(db_);
}

Database::Database(Database&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)), path_(std::move(other.path_)) {}

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    if (db_) sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
    path_ = std::move(other.path_);
  }
  return *this;
}

namespace {

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_check(void* arg) {
  auto* deadline = static_cast<Deadline*>(arg);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;
  }
  return 0;
}

class Statement {
 public:
  Statement() = default;
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  sqlite3_stmt** out() { return &stmt_; }
  sqlite3_stmt* get() const { return stmt_; }

 private:
  sqlite3_stmt* stmt_ = nullptr;
};

ExecutionResult error_result(std::string message) {
  ExecutionResult r;
  r.status = ExecutionResult::Status::error;
  r.error_message = std::move(message);
  return r;
}

// True when the tail left by prepare holds only whitespace, semicolons or
// comments.
bool tail_is_empty(sqlite3* db, const char* tail) {
  while (tail && *tail) {
    Statement next;
    const char* rest = nullptr;
    if (sqlite3_prepare_v2(db, tail, -1, next.out(), &rest) != SQLITE_OK) return false;
    if (next.get()) return false;
    if (rest == tail) break;
    tail = rest;
  }
  return true;
}

Value read_value(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, col);
    case SQLITE_TEXT: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
    }
    case SQLITE_BLOB: {
      const auto* data = static_cast<const unsigned char*>(sqlite3_column_blob(stmt, col));
      const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt, col));
      return std::vector<unsigned char>(data, data + n);
    }
    default: return std::monostate{};
  }
}

}  // namespace

ExecutionResult execute(const Database& db, std::string_view sql, const ExecOptions& options) {
  sqlite3* handle = db.handle();
  const std::string text(sql);

  Deadline deadline{std::chrono::steady_clock::now() + options.timeout};
  sqlite3_progress_handler(handle, 1000, progress_check, &deadline);
  struct ClearHandler {
    sqlite3* h;
    ~ClearHandler() { sqlite3_progress_handler(h, 0, nullptr, nullptr); }
  } clear{handle};

  auto timeout_result = [&] {
    return error_result(fmt::format("query timed out after {} ms", options.timeout.count()));
  };

  Statement stmt;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(handle, text.c_str(), static_cast<int>(text.size()), stmt.out(), &tail) !=
      SQLITE_OK) {
    if (deadline.expired) return timeout_result();
    return error_result(sqlite3_errmsg(handle));
  }
  if (!stmt.get()) return error_result("empty query");
  if (!tail_is_empty(handle, tail)) return error_result("multiple statements are not supported");
  if (!sqlite3_stmt_readonly(stmt.get())) return error_result("only read-only queries are permitted");
  // ATTACH, DETACH and transaction control count as read-only but return no rows.
  if (sqlite3_column_count(stmt.get()) == 0) return error_result("only queries that return rows are permitted");

  ExecutionResult result;
  const int ncol = sqlite3_column_count(stmt.get());
  for (int c = 0; c < ncol; ++c) {
    const char* name = sqlite3_column_name(stmt.get(), c);
    result.column_names.emplace_back(name ? name : "");
  }

  for (;;) {
    const int rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) {
      if (deadline.expired) return timeout_result();
      return error_result(sqlite3_errmsg(handle));
    }
    if (options.row_cap && result.rows.size() == *options.row_cap) {
      result.truncated = true;
      break;
    }
    Row row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int c = 0; c < ncol; ++c) row.push_back(read_value(stmt.get(), c));
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string value_text(const Value& value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "NULL"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      char* s = sqlite3_mprintf("%!.15g", v);
      std::string out = s ? s : "";
      sqlite3_free(s);
      return out;
    }
    std::string operator()(const std::string& v) const { return v; }
    std::string operator()(const std::vector<unsigned char>& v) const {
      std::string out = "x'";
      for (auto b : v) out += fmt::format("{:02X}", b);
      return out + "'";
    }
  };
  return std::visit(Visitor{}, value);
}

namespace {

// Display width in code points; continuation bytes do not advance the cursor.
std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

bool is_numeric(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

}  // namespace

std::string render_observation(const ExecutionResult& result) {
  if (!result.ok()) return "Error: " + result.error_message.value_or("unknown error");

  const std::size_t ncol = result.column_names.size();
  std::vector<std::size_t> width(ncol);
  std::vector<std::vector<std::string>> cells;
  cells.reserve(result.rows.size());
  for (std::size_t c = 0; c < ncol; ++c) width[c] = display_width(result.column_names[c]);
  for (const auto& row : result.rows) {
    auto& line = cells.emplace_back();
    for (std::size_t c = 0; c < ncol; ++c) {
      line.push_back(single_line(c < row.size() ? value_text(row[c]) : ""));
      width[c] = std::max(width[c], display_width(line.back()));
    }
  }

  std::string border = "+";
  for (auto w : width) border += std::string(w + 2, '-') + "+";

  auto pad = [](const std::string& s, std::size_t w, bool right) {
    const std::string fill(w - display_width(s), ' ');
    return right ? fill + s : s + fill;
  };

  std::string out = border + "\n|";
  for (std::size_t c = 0; c < ncol; ++c) out += " " + pad(result.column_names[c], width[c], false) + " |";
  out += "\n" + border;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    out += "\n|";
    for (std::size_t c = 0; c < ncol; ++c) {
      const bool right = c < result.rows[r].size() && is_numeric(result.rows[r][c]);
      out += " " + pad(cells[r][c], width[c], right) + " |";
    }
  }
  if (cells.empty()) {
    out += "\n(0 rows)";
  } else {
    out += "\n" + border;
  }
  if (result.truncated)
    out += fmt::format("\nNote: result truncated to the first {} rows.", result.rows.size());
  return out;
}

namespace {

Value canonical(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d) && std::trunc(*d) == *d && *d >= -9.2233720368547758e18 &&
        *d < 9.2233720368547758e18)
      return static_cast<std::int64_t>(*d);
  }
  return v;
}

std::vector<Row> canonical_rows(const std::vector<Row>& rows) {
  std::vector<Row> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    Row r;
    r.reserve(row.size());
    for (const auto& v : row) r.push_back(canonical(v));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

bool results_equal(const ExecutionResult& a, const ExecutionResult& b, bool order_sensitive) {
  if (!a.ok() || !b.ok()) return false;
  if (a.rows.size() != b.rows.size()) return false;
  auto ra = canonical_rows(a.rows);
  auto rb = canonical_rows(b.rows);
  if (!order_sensitive) {
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
  }
  return ra == rb;
}

}  // namespace sqlagent
