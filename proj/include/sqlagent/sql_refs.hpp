#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sqlagent/core.hpp"

namespace sqlagent {

/// Tables and columns a query touches, named as the schema declares them.
struct SqlReferences {
  /// Every base table that appears in some FROM clause, in first-seen order.
  std::vector<std::string> tables;
  /// Referenced columns per table. A table referenced only through COUNT(*)
  /// is present in `tables` with no entry here.
  std::map<std::string, std::set<std::string>> columns;

  bool references(std::string_view table) const;
  const std::set<std::string>& columns_of(std::string_view table) const;
};

/// Parses a SELECT statement (CTEs, compound selects, joins with ON/USING/
/// NATURAL, derived tables, correlated subqueries) and resolves every column
/// reference against `schema` the way the engine scopes identifiers:
/// qualified names through FROM aliases, unqualified names against the
/// innermost scope that declares them, `*` expanding to all columns.
///
/// Throws ParseFailure for text that is not a single SELECT statement or
/// that names a table missing from the schema.
SqlReferences extract_references(std::string_view sql, const Schema& schema);

/// True when the statement carries an ORDER BY outside any parentheses, i.e.
/// one that orders the final result. Unlexable input yields false.
bool has_top_level_order_by(std::string_view sql);

}  // namespace sqlagent
