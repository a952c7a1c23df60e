#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tablevc {

enum class ColumnType : std::uint8_t { Int64 = 1, Float64 = 2, String = 3, Bytes = 4, Bool = 5 };

std::string_view to_string(ColumnType type) noexcept;
std::optional<ColumnType> parse_column_type(std::string_view text) noexcept;

struct Bytes {
  std::string data;
  bool operator==(const Bytes&) const = default;
};

// Variant index doubles as the on-disk tag: 0 null, then ColumnType values.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Bytes, bool>;
using Row = std::vector<Value>;

inline bool is_null(const Value& v) noexcept { return v.index() == 0; }
bool value_matches(const Value& v, ColumnType type) noexcept;

// Total order: null < int64 < float64 < string < bytes < bool, then by value.
// Doubles order by IEEE totalOrder, so -0.0 != +0.0 and NaN equals itself.
std::strong_ordering compare_values(const Value& a, const Value& b) noexcept;
std::strong_ordering compare_rows(const Row& a, const Row& b) noexcept;
bool rows_equal(const Row& a, const Row& b) noexcept;

std::size_t hash_value(const Value& v) noexcept;
std::size_t hash_row(const Row& r) noexcept;

struct RowHash {
  std::size_t operator()(const Row& r) const noexcept { return hash_row(r); }
};
struct RowEqual {
  bool operator()(const Row& a, const Row& b) const noexcept { return rows_equal(a, b); }
};
struct RowLess {
  bool operator()(const Row& a, const Row& b) const noexcept { return compare_rows(a, b) < 0; }
};

// Text form used by CSV export and the CLI. Null renders as the empty string.
std::string format_value(const Value& v);
Value parse_value(std::string_view text, ColumnType type);

struct Column {
  std::string name;
  ColumnType type;
  bool operator==(const Column&) const = default;
};

struct Schema {
  std::vector<Column> columns;
  std::vector<std::string> primary_key;

  bool has_primary_key() const noexcept { return !primary_key.empty(); }
  std::optional<std::size_t> column_index(std::string_view name) const noexcept;
  std::vector<std::size_t> key_indices() const;
  std::vector<ColumnType> key_types() const;

  // Throws InvalidSchema.
  void validate() const;
  // Throws SchemaMismatch / PkViolation (null key column).
  void check_row(const Row& row) const;
  // Stable 64-bit digest of names, types, order and key definition.
  std::uint64_t digest() const;

  bool operator==(const Schema&) const = default;
};

}  // namespace tablevc
