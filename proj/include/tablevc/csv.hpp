#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tablevc/value.hpp"

namespace tablevc {

// RFC 4180 fields. An unquoted empty field reads as null, a quoted one as
// the empty string.
struct CsvField {
  std::string text;
  bool quoted = false;
};
using CsvRecord = std::vector<CsvField>;

// Throws InvalidArgument on an unterminated quote.
std::vector<CsvRecord> parse_csv(std::string_view text);

std::string csv_escape(std::string_view text, bool force_quotes = false);
std::string csv_value(const Value& v);

// Rows of a CSV document whose header names schema columns (any order,
// all columns required).
std::vector<Row> rows_from_csv(std::string_view text, const Schema& schema);
// Tuples of `columns` read from a CSV document with exactly those columns.
std::vector<std::vector<Value>> tuples_from_csv(std::string_view text, const std::vector<std::string>& columns,
                                                const std::vector<ColumnType>& types);

}  // namespace tablevc
