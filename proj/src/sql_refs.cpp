#include "sqlagent/sql_refs.hpp"

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <unordered_set>

namespace sqlagent {

bool SqlReferences::references(std::string_view table) const {
  for (const auto& t : tables)
    if (iequals(t, table)) return true;
  return false;
}

const std::set<std::string>& SqlReferences::columns_of(std::string_view table) const {
  static const std::set<std::string> kEmpty;
  for (const auto& [name, cols] : columns)
    if (iequals(name, table)) return cols;
  return kEmpty;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { ident, quoted, dquoted, string, number, param, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;   // identifier text with quotes removed, or operator text
  std::string upper;  // uppercased text for bare identifiers
  std::size_t pos = 0;
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> lex(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto quoted_body = [&](char close, Tok kind) {
    const std::size_t start = i++;
    std::string body;
    for (;;) {
      if (i >= n) throw ParseFailure("unterminated quoted token at offset " + std::to_string(start));
      char c = sql[i++];
      if (c == close) {
        if (close != ']' && i < n && sql[i] == close) {
          body.push_back(close);
          ++i;
          continue;
        }
        break;
      }
      body.push_back(c);
    }
    out.push_back({kind, std::move(body), {}, start});
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      const auto end = sql.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
    } else if (c == '\'') {
      quoted_body('\'', Tok::string);
    } else if (c == '"') {
      quoted_body('"', Tok::dquoted);
    } else if (c == '`') {
      quoted_body('`', Tok::quoted);
    } else if (c == '[') {
      quoted_body(']', Tok::quoted);
    } else if ((c == 'x' || c == 'X') && i + 1 < n && sql[i + 1] == '\'') {
      ++i;
      quoted_body('\'', Tok::string);
    } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      const std::size_t start = i;
      if (c == '0' && i + 1 < n && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
      } else {
        while (i < n && (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.' || sql[i] == '_')) ++i;
        if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
          ++i;
          if (i < n && (sql[i] == '+' || sql[i] == '-')) ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
        }
      }
      out.push_back({Tok::number, std::string(sql.substr(start, i - start)), {}, start});
    } else if (ident_start(c)) {
      const std::size_t start = i;
      while (i < n && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
      auto text = std::string(sql.substr(start, i - start));
      out.push_back({Tok::ident, text, upper(text), start});
    } else if (c == '?' || c == ':' || c == '@' || c == '$') {
      const std::size_t start = i++;
      while (i < n && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
      out.push_back({Tok::param, std::string(sql.substr(start, i - start)), {}, start});
    } else {
      static constexpr std::string_view kMulti[] = {"->>", "||", "<=", ">=", "<>", "!=", "==",
                                                   "<<", ">>", "->"};
      std::string op(1, static_cast<char>(c));
      for (auto m : kMulti) {
        if (sql.substr(i, m.size()) == m) {
          op = std::string(m);
          break;
        }
      }
      out.push_back({Tok::punct, op, {}, i});
      i += op.size();
    }
  }
  out.push_back({Tok::end, {}, {}, n});
  return out;
}

// Keywords that end or structure a clause; never read as bare column names
// or implicit aliases.
const std::unordered_set<std::string>& reserved() {
  static const std::unordered_set<std::string> kWords = {
      "SELECT", "FROM",   "WHERE",   "GROUP",    "HAVING",  "ORDER",   "LIMIT",     "OFFSET",
      "UNION",  "EXCEPT", "INTERSECT", "ALL",    "DISTINCT", "JOIN",   "INNER",     "LEFT",
      "RIGHT",  "FULL",   "OUTER",   "CROSS",    "NATURAL", "ON",      "USING",     "AS",
      "AND",    "OR",     "NOT",     "IN",       "IS",      "LIKE",    "GLOB",      "REGEXP",
      "MATCH",  "BETWEEN", "CASE",   "WHEN",     "THEN",    "ELSE",    "END",       "CAST",
      "EXISTS", "NULL",   "WINDOW",  "VALUES",   "WITH",    "BY",      "ASC",       "DESC",
      "COLLATE", "ESCAPE", "INDEXED", "ISNULL",  "NOTNULL", "RETURNING", "FILTER",  "OVER",
      "NULLS"};
  return kWords;
}

// ---------------------------------------------------------------------------
// Syntax tree: only what reference resolution needs.

struct Select;

struct ColRef {
  std::string qualifier;
  std::string name;
  bool dquoted = false;
};

struct Expr {
  std::vector<ColRef> cols;
  std::vector<std::shared_ptr<Select>> subqueries;
};

struct ResultColumn {
  bool star = false;
  std::string star_qualifier;
  Expr expr;
  std::optional<std::string> alias;
  std::optional<std::string> bare_name;  // set when the expression is a lone column
};

struct Source {
  enum class Kind { table, subquery, function };
  Kind kind = Kind::table;
  std::string name;
  std::string alias;
  std::shared_ptr<Select> sub;
  Expr args;
  bool natural = false;
  std::vector<std::string> using_cols;
  Expr on;
};

struct Core {
  bool is_values = false;
  std::size_t values_width = 0;
  std::vector<ResultColumn> cols;
  std::vector<Source> from;
  Expr where, group_by, having, windows, values;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  std::shared_ptr<Select> body;
};

struct Select {
  std::vector<Cte> ctes;
  std::vector<Core> cores;
  Expr order_by;
  Expr limit;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::shared_ptr<Select> statement() {
    auto sel = select();
    while (is_punct(";")) advance();
    if (peek().kind != Tok::end) fail("unexpected trailing input");
    return sel;
  }

 private:
  std::vector<Token> toks_;
  std::size_t at_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(at_ + ahead, toks_.size() - 1)];
  }
  const Token& advance() {
    const Token& t = toks_[at_];
    if (at_ + 1 < toks_.size()) ++at_;
    return t;
  }
  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::ident && t.upper == kw;
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::punct && t.text == p;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    advance();
    return true;
  }
  bool accept_punct(std::string_view p) {
    if (!is_punct(p)) return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const auto& t = peek();
    throw ParseFailure(what + " near offset " + std::to_string(t.pos) +
                       (t.kind == Tok::end ? " (end of input)" : " ('" + t.text + "')"));
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected " + std::string(kw));
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
  }
  bool is_name_token(std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    if (t.kind == Tok::quoted || t.kind == Tok::dquoted) return true;
    return t.kind == Tok::ident && !reserved().contains(t.upper);
  }
  std::string name() {
    const auto& t = peek();
    if (t.kind == Tok::ident || t.kind == Tok::quoted || t.kind == Tok::dquoted) return advance().text;
    fail("expected a name");
  }
  bool starts_select(std::size_t ahead = 0) const {
    return is_kw("SELECT", ahead) || is_kw("WITH", ahead) || is_kw("VALUES", ahead);
  }

  std::shared_ptr<Select> select() {
    auto sel = std::make_shared<Select>();
    if (accept_kw("WITH")) {
      accept_kw("RECURSIVE");
      do {
        Cte cte;
        cte.name = name();
        if (accept_punct("(")) {
          do cte.columns.push_back(name());
          while (accept_punct(","));
          expect_punct(")");
        }
        expect_kw("AS");
        accept_kw("NOT");
        accept_kw("MATERIALIZED");
        expect_punct("(");
        cte.body = select();
        expect_punct(")");
        sel->ctes.push_back(std::move(cte));
      } while (accept_punct(","));
    }
    sel->cores.push_back(core());
    for (;;) {
      if (accept_kw("UNION")) {
        accept_kw("ALL");
      } else if (!accept_kw("INTERSECT") && !accept_kw("EXCEPT")) {
        break;
      }
      sel->cores.push_back(core());
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      ordering_terms(sel->order_by);
    }
    if (accept_kw("LIMIT")) {
      expr(sel->limit);
      if (accept_kw("OFFSET") || accept_punct(",")) expr(sel->limit);
    }
    return sel;
  }

  void ordering_terms(Expr& out) {
    do {
      expr(out);
      if (accept_kw("COLLATE")) name();
      if (!accept_kw("ASC")) accept_kw("DESC");
      if (accept_kw("NULLS")) {
        if (!accept_kw("FIRST")) expect_kw("LAST");
      }
    } while (accept_punct(","));
  }

  Core core() {
    Core c;
    if (accept_kw("VALUES")) {
      c.is_values = true;
      do {
        expect_punct("(");
        std::size_t width = 0;
        do {
          expr(c.values);
          ++width;
        } while (accept_punct(","));
        expect_punct(")");
        c.values_width = width;
      } while (accept_punct(","));
      return c;
    }
    expect_kw("SELECT");
    if (!accept_kw("DISTINCT")) accept_kw("ALL");
    do c.cols.push_back(result_column());
    while (accept_punct(","));
    if (accept_kw("FROM")) from_clause(c.from);
    if (accept_kw("WHERE")) expr(c.where);
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      do expr(c.group_by);
      while (accept_punct(","));
    }
    if (accept_kw("HAVING")) expr(c.having);
    if (accept_kw("WINDOW")) {
      do {
        name();
        expect_kw("AS");
        expect_punct("(");
        soup(c.windows);
      } while (accept_punct(","));
    }
    return c;
  }

  ResultColumn result_column() {
    ResultColumn rc;
    if (accept_punct("*")) {
      rc.star = true;
      return rc;
    }
    if ((peek().kind == Tok::ident || peek().kind == Tok::quoted || peek().kind == Tok::dquoted) &&
        is_punct(".", 1) && is_punct("*", 2)) {
      rc.star = true;
      rc.star_qualifier = advance().text;
      advance();
      advance();
      return rc;
    }
    const auto start = at_;
    expr(rc.expr);
    if (rc.expr.cols.size() == 1 && rc.expr.subqueries.empty()) {
      const auto consumed = at_ - start;
      const auto& ref = rc.expr.cols.front();
      if (consumed == 1 || (consumed == 3 && !ref.qualifier.empty())) rc.bare_name = ref.name;
    }
    if (accept_kw("AS")) {
      rc.alias = alias_token();
    } else if (is_name_token() || peek().kind == Tok::string) {
      rc.alias = advance().text;
    }
    return rc;
  }

  std::string alias_token() {
    const auto& t = peek();
    if (t.kind == Tok::ident || t.kind == Tok::quoted || t.kind == Tok::dquoted || t.kind == Tok::string)
      return advance().text;
    fail("expected an alias");
  }

  void from_clause(std::vector<Source>& out) {
    source_item(out);
    for (;;) {
      bool natural = false;
      if (accept_punct(",")) {
        // plain cross join
      } else {
        const auto mark = at_;
        if (accept_kw("NATURAL")) natural = true;
        if (accept_kw("LEFT") || accept_kw("RIGHT") || accept_kw("FULL")) {
          accept_kw("OUTER");
        } else if (!accept_kw("INNER")) {
          accept_kw("CROSS");
        }
        if (!accept_kw("JOIN")) {
          at_ = mark;
          break;
        }
      }
      const auto before = out.size();
      source_item(out);
      auto& joined = out[before];
      joined.natural = natural;
      if (accept_kw("ON")) {
        expr(joined.on);
      } else if (accept_kw("USING")) {
        expect_punct("(");
        do joined.using_cols.push_back(name());
        while (accept_punct(","));
        expect_punct(")");
      }
    }
  }

  void source_item(std::vector<Source>& out) {
    if (accept_punct("(")) {
      if (starts_select()) {
        Source s;
        s.kind = Source::Kind::subquery;
        s.sub = select();
        expect_punct(")");
        s.alias = optional_alias();
        out.push_back(std::move(s));
      } else {
        from_clause(out);
        expect_punct(")");
        optional_alias();
      }
      return;
    }
    Source s;
    s.name = name();
    if (accept_punct(".")) s.name = name();
    if (accept_punct("(")) {
      s.kind = Source::Kind::function;
      if (!is_punct(")")) {
        do expr(s.args);
        while (accept_punct(","));
      }
      expect_punct(")");
    }
    s.alias = optional_alias();
    if (s.alias.empty() && s.kind == Source::Kind::table) s.alias = s.name;
    if (accept_kw("INDEXED")) {
      expect_kw("BY");
      name();
    } else if (is_kw("NOT") && is_kw("INDEXED", 1)) {
      advance();
      advance();
    }
    out.push_back(std::move(s));
  }

  std::string optional_alias() {
    if (accept_kw("AS")) return alias_token();
    if (is_name_token() || peek().kind == Tok::string) return advance().text;
    return {};
  }

  // Balanced token run up to the closing parenthesis (already past the
  // opening one). Identifiers become candidate column references; anything
  // that does not resolve is dropped later.
  void soup(Expr& out) {
    int depth = 1;
    while (depth > 0) {
      const auto& t = peek();
      if (t.kind == Tok::end) fail("unbalanced parenthesis");
      if (t.kind == Tok::punct && t.text == "(") {
        advance();
        if (starts_select()) {
          out.subqueries.push_back(select());
          expect_punct(")");
        } else {
          ++depth;
        }
        continue;
      }
      if (t.kind == Tok::punct && t.text == ")") {
        advance();
        --depth;
        continue;
      }
      if ((t.kind == Tok::ident && !reserved().contains(t.upper)) || t.kind == Tok::quoted) {
        if (is_punct("(", 1)) {
          advance();
          continue;
        }
        column_ref(out);
        continue;
      }
      advance();
    }
  }

  void column_ref(Expr& out) {
    ColRef ref;
    ref.dquoted = peek().kind == Tok::dquoted;
    ref.name = advance().text;
    while (is_punct(".") &&
           (peek(1).kind == Tok::ident || peek(1).kind == Tok::quoted || peek(1).kind == Tok::dquoted)) {
      advance();
      ref.qualifier = ref.name;
      ref.dquoted = peek().kind == Tok::dquoted;
      ref.name = advance().text;
    }
    out.cols.push_back(std::move(ref));
  }

  // Expression grammar, permissive about precedence: only the references
  // inside matter, not the shape of the tree.
  void expr(Expr& out, bool allow_and = true) {
    unary(out);
    for (;;) {
      const auto& t = peek();
      if (t.kind == Tok::punct) {
        static const std::unordered_set<std::string> kBinary = {
            "||", "*", "/", "%", "+", "-", "<<", ">>", "&", "|", "<", "<=", ">",
            ">=", "=", "==", "!=", "<>", "->", "->>"};
        if (kBinary.contains(t.text)) {
          advance();
          unary(out);
          continue;
        }
        break;
      }
      if (t.kind != Tok::ident) break;
      const std::string kw = t.upper;
      if (kw == "AND") {
        if (!allow_and) break;
        advance();
        unary(out);
      } else if (kw == "OR") {
        advance();
        unary(out);
      } else if (kw == "IS") {
        advance();
        accept_kw("NOT");
        if (accept_kw("DISTINCT")) expect_kw("FROM");
        unary(out);
      } else if (kw == "ISNULL" || kw == "NOTNULL") {
        advance();
      } else if (kw == "COLLATE") {
        advance();
        name();
      } else if (kw == "NOT" || kw == "IN" || kw == "LIKE" || kw == "GLOB" || kw == "REGEXP" ||
                 kw == "MATCH" || kw == "BETWEEN") {
        if (kw == "NOT") {
          if (is_kw("NULL", 1)) {
            advance();
            advance();
            continue;
          }
          static const std::unordered_set<std::string> kNegatable = {"IN", "LIKE", "GLOB", "REGEXP",
                                                                     "MATCH", "BETWEEN"};
          if (peek(1).kind != Tok::ident || !kNegatable.contains(peek(1).upper)) break;
          advance();
        }
        const std::string op = advance().upper;
        if (op == "IN") {
          in_rhs(out);
        } else if (op == "BETWEEN") {
          expr(out, false);
          expect_kw("AND");
          unary(out);
        } else {
          unary(out);
          if (accept_kw("ESCAPE")) unary(out);
        }
      } else {
        break;
      }
    }
  }

  void in_rhs(Expr& out) {
    if (accept_punct("(")) {
      if (starts_select()) {
        out.subqueries.push_back(select());
      } else if (!is_punct(")")) {
        do expr(out);
        while (accept_punct(","));
      }
      expect_punct(")");
      return;
    }
    // IN table-name / table-function form; contributes no columns.
    name();
    if (accept_punct(".")) name();
    if (accept_punct("(")) soup(out);
  }

  void unary(Expr& out) {
    for (;;) {
      if (is_punct("-") || is_punct("+") || is_punct("~")) {
        advance();
      } else if (is_kw("NOT")) {
        advance();
      } else {
        break;
      }
    }
    primary(out);
  }

  void primary(Expr& out) {
    const auto& t = peek();
    switch (t.kind) {
      case Tok::number:
      case Tok::string:
      case Tok::param: advance(); return;
      case Tok::end: fail("unexpected end of input");
      case Tok::punct:
        if (t.text == "(") {
          advance();
          if (starts_select()) {
            out.subqueries.push_back(select());
          } else {
            do expr(out);
            while (accept_punct(","));
          }
          expect_punct(")");
          return;
        }
        fail("unexpected token");
      case Tok::quoted:
      case Tok::dquoted:
        if (is_punct("(", 1)) {
          function_call(out);
          return;
        }
        column_ref(out);
        return;
      case Tok::ident: break;
    }

    const std::string kw = t.upper;
    if (kw == "CASE") {
      advance();
      if (!is_kw("WHEN")) expr(out);
      while (accept_kw("WHEN")) {
        expr(out);
        expect_kw("THEN");
        expr(out);
      }
      if (accept_kw("ELSE")) expr(out);
      expect_kw("END");
      return;
    }
    if (kw == "CAST") {
      advance();
      expect_punct("(");
      expr(out);
      expect_kw("AS");
      int depth = 1;
      while (depth > 0) {
        if (peek().kind == Tok::end) fail("unterminated CAST");
        if (is_punct("(")) ++depth;
        if (is_punct(")")) --depth;
        advance();
      }
      return;
    }
    if (kw == "EXISTS") {
      advance();
      expect_punct("(");
      out.subqueries.push_back(select());
      expect_punct(")");
      return;
    }
    if (kw == "NULL" || kw == "TRUE" || kw == "FALSE" || kw == "CURRENT_DATE" || kw == "CURRENT_TIME" ||
        kw == "CURRENT_TIMESTAMP") {
      advance();
      return;
    }
    if (kw == "RAISE" && is_punct("(", 1)) {
      advance();
      advance();
      soup(out);
      return;
    }
    if (is_punct("(", 1) && kw != "SELECT" && kw != "VALUES") {
      function_call(out);
      return;
    }
    if (reserved().contains(kw)) fail("unexpected keyword");
    column_ref(out);
  }

  void function_call(Expr& out) {
    advance();  // name
    expect_punct("(");
    if (!accept_punct(")")) {
      if (!accept_punct("*")) {
        accept_kw("DISTINCT");
        do expr(out);
        while (accept_punct(","));
        if (accept_kw("ORDER")) {
          expect_kw("BY");
          ordering_terms(out);
        }
      }
      expect_punct(")");
    }
    if (accept_kw("FILTER")) {
      expect_punct("(");
      expect_kw("WHERE");
      expr(out);
      expect_punct(")");
    }
    if (accept_kw("OVER")) {
      if (accept_punct("(")) {
        soup(out);
      } else {
        name();
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Resolution

struct ScopeSource {
  std::string alias;
  const TableDef* table = nullptr;         // base table
  std::vector<std::string> derived_cols;   // derived source output names
};

struct Scope {
  const Scope* parent = nullptr;
  std::vector<ScopeSource> sources;
};

using CteEnv = std::map<std::string, std::vector<std::string>>;  // lower-case name -> columns

bool is_rowid(std::string_view name) {
  return iequals(name, "rowid") || iequals(name, "oid") || iequals(name, "_rowid_");
}

class Resolver {
 public:
  Resolver(const Schema& schema, SqlReferences& refs) : schema_(schema), refs_(refs) {}

  std::vector<std::string> select(const Select& sel, const Scope* outer, CteEnv env) {
    for (const auto& cte : sel.ctes) {
      // Registered before resolving the body so recursive references bind.
      env[to_lower(cte.name)] = cte.columns;
      auto out = select(*cte.body, outer, env);
      env[to_lower(cte.name)] = cte.columns.empty() ? out : cte.columns;
    }
    std::vector<std::string> names;
    const bool single = sel.cores.size() == 1;
    for (std::size_t i = 0; i < sel.cores.size(); ++i) {
      auto core_names = core(sel.cores[i], outer, env, single ? &sel.order_by : nullptr);
      if (i == 0) names = std::move(core_names);
    }
    Scope empty{outer, {}};
    expr(sel.limit, empty, env);
    return names;
  }

 private:
  const Schema& schema_;
  SqlReferences& refs_;

  void mark_table(const TableDef& t) {
    for (const auto& name : refs_.tables)
      if (name == t.name) return;
    refs_.tables.push_back(t.name);
  }

  void mark(const TableDef& t, std::string_view column) {
    if (const auto* c = t.find_column(column)) refs_.columns[t.name].insert(c->name);
  }

  void mark_all(const TableDef& t) {
    for (const auto& c : t.columns) refs_.columns[t.name].insert(c.name);
  }

  static std::vector<std::string> columns_of(const ScopeSource& s) {
    if (!s.table) return s.derived_cols;
    std::vector<std::string> out;
    for (const auto& c : s.table->columns) out.push_back(c.name);
    return out;
  }

  static bool provides(const ScopeSource& s, std::string_view column) {
    if (s.table) return s.table->find_column(column) != nullptr;
    for (const auto& c : s.derived_cols)
      if (iequals(c, column)) return true;
    return false;
  }

  std::vector<std::string> core(const Core& c, const Scope* outer, const CteEnv& env, const Expr* order_by) {
    Scope scope{outer, {}};
    if (c.is_values) {
      expr(c.values, scope, env);
      std::vector<std::string> names;
      for (std::size_t i = 1; i <= c.values_width; ++i) names.push_back("column" + std::to_string(i));
      return names;
    }

    for (const auto& src : c.from) {
      ScopeSource entry;
      entry.alias = src.alias;
      switch (src.kind) {
        case Source::Kind::table: {
          if (auto it = env.find(to_lower(src.name)); it != env.end()) {
            entry.derived_cols = it->second;
          } else if (const auto* t = schema_.find_table(src.name)) {
            entry.table = t;
            mark_table(*t);
          } else {
            throw ParseFailure("no such table: " + src.name);
          }
          break;
        }
        case Source::Kind::subquery:
          entry.derived_cols = select(*src.sub, outer, env);
          break;
        case Source::Kind::function:
          expr(src.args, scope, env);
          break;
      }

      for (const auto& col : src.using_cols) {
        for (const auto& prev : scope.sources)
          if (prev.table) mark(*prev.table, col);
        if (entry.table) mark(*entry.table, col);
      }
      if (src.natural) {
        for (const auto& col : columns_of(entry)) {
          bool shared = false;
          for (const auto& prev : scope.sources) {
            if (provides(prev, col)) {
              shared = true;
              if (prev.table) mark(*prev.table, col);
            }
          }
          if (shared && entry.table) mark(*entry.table, col);
        }
      }
      scope.sources.push_back(std::move(entry));
    }

    for (const auto& src : c.from) expr(src.on, scope, env);

    std::vector<std::string> names;
    std::vector<std::string> aliases;
    for (const auto& rc : c.cols) {
      if (rc.star) {
        bool matched = rc.star_qualifier.empty();
        for (const auto& s : scope.sources) {
          if (!rc.star_qualifier.empty() && !iequals(s.alias, rc.star_qualifier)) continue;
          matched = true;
          if (s.table) mark_all(*s.table);
          for (auto& n : columns_of(s)) names.push_back(std::move(n));
        }
        if (!matched) throw ParseFailure("no such table: " + rc.star_qualifier);
        continue;
      }
      expr(rc.expr, scope, env);
      if (rc.alias) {
        names.push_back(*rc.alias);
        aliases.push_back(*rc.alias);
      } else {
        names.push_back(rc.bare_name.value_or(""));
      }
    }

    expr(c.where, scope, env);
    expr(c.group_by, scope, env);
    expr(c.having, scope, env);
    expr(c.windows, scope, env);

    if (order_by) {
      // Bare names in ORDER BY bind to result aliases before table columns.
      Expr filtered;
      filtered.subqueries = order_by->subqueries;
      for (const auto& ref : order_by->cols) {
        bool is_alias = false;
        if (ref.qualifier.empty())
          for (const auto& a : aliases)
            if (iequals(a, ref.name)) is_alias = true;
        if (!is_alias) filtered.cols.push_back(ref);
      }
      expr(filtered, scope, env);
    }
    return names;
  }

  void expr(const Expr& e, const Scope& scope, const CteEnv& env) {
    for (const auto& ref : e.cols) column(ref, scope);
    for (const auto& sub : e.subqueries) select(*sub, &scope, env);
  }

  void column(const ColRef& ref, const Scope& scope) {
    if (!ref.qualifier.empty()) {
      for (const Scope* s = &scope; s; s = s->parent) {
        for (const auto& src : s->sources) {
          if (!iequals(src.alias, ref.qualifier)) continue;
          if (src.table) {
            if (src.table->find_column(ref.name)) {
              mark(*src.table, ref.name);
            } else if (!is_rowid(ref.name)) {
              throw ParseFailure("no such column: " + ref.qualifier + "." + ref.name);
            }
          }
          return;
        }
      }
      throw ParseFailure("no such table: " + ref.qualifier);
    }
    for (const Scope* s = &scope; s; s = s->parent) {
      bool found = false;
      for (const auto& src : s->sources) {
        if (!provides(src, ref.name)) continue;
        found = true;
        if (src.table) mark(*src.table, ref.name);
      }
      if (found) return;
    }
    // Unresolved: a result alias, a rowid, or a double-quoted string literal.
  }
};

}  // namespace

SqlReferences extract_references(std::string_view sql, const Schema& schema) {
  Parser parser(lex(sql));
  auto statement = parser.statement();
  SqlReferences refs;
  Resolver resolver(schema, refs);
  resolver.select(*statement, nullptr, {});
  return refs;
}

bool has_top_level_order_by(std::string_view sql) {
  std::vector<Token> toks;
  try {
    toks = lex(sql);
  } catch (const ParseFailure&) {
    return false;
  }
  int depth = 0;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == Tok::punct && t.text == "(") ++depth;
    if (t.kind == Tok::punct && t.text == ")") --depth;
    if (depth == 0 && t.kind == Tok::ident && t.upper == "ORDER" && toks[i + 1].kind == Tok::ident &&
        toks[i + 1].upper == "BY")
      return true;
  }
  return false;
}

}  // namespace sqlagent
