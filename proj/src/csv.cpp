#include "tablevc/csv.hpp"

#include "tablevc/error.hpp"

namespace tablevc {

std::vector<CsvRecord> parse_csv(std::string_view text) {
  std::vector<CsvRecord> out;
  CsvRecord record;
  CsvField field;
  bool in_quotes = false;
  bool at_field_start = true;
  bool any = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    at_field_start = true;
  };
  auto end_record = [&] {
    end_field();
    out.push_back(std::move(record));
    record.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.text.push_back(c);
      }
      continue;
    }
    if (c == '"' && at_field_start) {
      in_quotes = true;
      field.quoted = true;
      at_field_start = false;
      any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      if (!any && record.empty() && field.text.empty()) continue;
      end_record();
    } else {
      field.text.push_back(c);
      at_field_start = false;
      any = true;
    }
  }
  if (in_quotes) fail(ErrorCode::InvalidArgument, "unterminated quoted CSV field");
  if (any || !field.text.empty()) end_record();
  return out;
}

std::string csv_escape(std::string_view text, bool force_quotes) {
  bool quote = force_quotes || text.find_first_of(",\"\r\n") != std::string_view::npos ||
               (!text.empty() && (text.front() == ' ' || text.back() == ' '));
  if (!quote) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_value(const Value& v) {
  if (is_null(v)) return {};
  auto text = format_value(v);
  return csv_escape(text, text.empty());
}

namespace {

Value field_value(const CsvField& f, ColumnType type) {
  if (f.text.empty() && !f.quoted) return std::monostate{};
  return parse_value(f.text, type);
}

std::vector<std::size_t> header_map(const CsvRecord& header, const std::vector<std::string>& columns) {
  if (header.size() != columns.size()) {
    fail(ErrorCode::InvalidArgument, "CSV header has " + std::to_string(header.size()) + " columns, expected " +
                                         std::to_string(columns.size()));
  }
  std::vector<std::size_t> pos(columns.size(), columns.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::size_t c = 0;
    while (c < columns.size() && columns[c] != header[i].text) ++c;
    if (c == columns.size()) fail(ErrorCode::InvalidArgument, "unknown CSV column '" + header[i].text + "'");
    if (pos[c] != columns.size()) fail(ErrorCode::InvalidArgument, "duplicate CSV column '" + header[i].text + "'");
    pos[c] = i;
  }
  return pos;
}

}  // namespace

std::vector<std::vector<Value>> tuples_from_csv(std::string_view text, const std::vector<std::string>& columns,
                                                const std::vector<ColumnType>& types) {
  auto records = parse_csv(text);
  if (records.empty()) fail(ErrorCode::InvalidArgument, "CSV input has no header");
  auto pos = header_map(records.front(), columns);
  std::vector<std::vector<Value>> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != columns.size()) {
      fail(ErrorCode::InvalidArgument, "CSV line " + std::to_string(r + 1) + " has " + std::to_string(rec.size()) +
                                           " fields, expected " + std::to_string(columns.size()));
    }
    std::vector<Value> t;
    t.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) t.push_back(field_value(rec[pos[c]], types[c]));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Row> rows_from_csv(std::string_view text, const Schema& schema) {
  std::vector<std::string> names;
  std::vector<ColumnType> types;
  for (const auto& c : schema.columns) {
    names.push_back(c.name);
    types.push_back(c.type);
  }
  return tuples_from_csv(text, names, types);
}

}  // namespace tablevc
