#include "tablevc/value.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <functional>
#include <unordered_set>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::CorruptObject: return "CorruptObject";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::DuplicateSnapshotName: return "DuplicateSnapshotName";
    case ErrorCode::UnknownSnapshot: return "UnknownSnapshot";
    case ErrorCode::OutOfRetention: return "OutOfRetention";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::WriteConflict: return "WriteConflict";
    case ErrorCode::PkViolation: return "PkViolation";
    case ErrorCode::MissingObject: return "MissingObject";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::MergeConflictFailure: return "MergeConflictFailure";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

std::string_view to_string(ColumnType type) noexcept {
  switch (type) {
    case ColumnType::Int64: return "INT64";
    case ColumnType::Float64: return "FLOAT64";
    case ColumnType::String: return "STRING";
    case ColumnType::Bytes: return "BYTES";
    case ColumnType::Bool: return "BOOL";
  }
  return "?";
}

std::optional<ColumnType> parse_column_type(std::string_view text) noexcept {
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "INT64" || upper == "INT" || upper == "BIGINT") return ColumnType::Int64;
  if (upper == "FLOAT64" || upper == "DOUBLE" || upper == "FLOAT") return ColumnType::Float64;
  if (upper == "STRING" || upper == "TEXT" || upper == "VARCHAR") return ColumnType::String;
  if (upper == "BYTES" || upper == "BLOB") return ColumnType::Bytes;
  if (upper == "BOOL" || upper == "BOOLEAN") return ColumnType::Bool;
  return std::nullopt;
}

bool value_matches(const Value& v, ColumnType type) noexcept {
  return is_null(v) || v.index() == static_cast<std::size_t>(type);
}

namespace {

std::int64_t total_order_bits(double d) noexcept {
  auto bits = std::bit_cast<std::int64_t>(d);
  // Negative numbers: flip magnitude bits so that more negative sorts first.
  return bits ^ static_cast<std::int64_t>(static_cast<std::uint64_t>(bits >> 63) >> 1);
}

}  // namespace

std::strong_ordering compare_values(const Value& a, const Value& b) noexcept {
  if (a.index() != b.index()) return a.index() <=> b.index();
  switch (a.index()) {
    case 0: return std::strong_ordering::equal;
    case 1: return std::get<1>(a) <=> std::get<1>(b);
    case 2: return total_order_bits(std::get<2>(a)) <=> total_order_bits(std::get<2>(b));
    case 3: return std::get<3>(a).compare(std::get<3>(b)) <=> 0;
    case 4: return std::get<4>(a).data.compare(std::get<4>(b).data) <=> 0;
    case 5: return std::get<5>(a) <=> std::get<5>(b);
  }
  return std::strong_ordering::equal;
}

std::strong_ordering compare_rows(const Row& a, const Row& b) noexcept {
  auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = compare_values(a[i], b[i]); c != 0) return c;
  }
  return a.size() <=> b.size();
}

bool rows_equal(const Row& a, const Row& b) noexcept {
  return a.size() == b.size() && compare_rows(a, b) == 0;
}

std::size_t hash_value(const Value& v) noexcept {
  std::size_t h = v.index() * 0x9e3779b97f4a7c15ULL;
  switch (v.index()) {
    case 1: h ^= std::hash<std::int64_t>{}(std::get<1>(v)); break;
    case 2: h ^= std::hash<std::int64_t>{}(std::bit_cast<std::int64_t>(std::get<2>(v))); break;
    case 3: h ^= std::hash<std::string>{}(std::get<3>(v)); break;
    case 4: h ^= std::hash<std::string>{}(std::get<4>(v).data); break;
    case 5: h ^= std::get<5>(v) ? 0x51ULL : 0x17ULL; break;
    default: break;
  }
  return h;
}

std::size_t hash_row(const Row& r) noexcept {
  std::size_t h = 0xcbf29ce484222325ULL ^ r.size();
  for (const auto& v : r) {
    h ^= hash_value(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

namespace {

constexpr char kHex[] = "0123456789abcdef";

std::string to_hex(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (unsigned char c : s) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xf]);
  }
  return out;
}

std::string from_hex(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) fail(ErrorCode::InvalidArgument, "odd-length hex literal");
  std::string out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]);
    int lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) fail(ErrorCode::InvalidArgument, "bad hex literal");
    out.push_back(static_cast<char>(hi * 16 + lo));
  }
  return out;
}

}  // namespace

std::string format_value(const Value& v) {
  switch (v.index()) {
    case 0: return {};
    case 1: return std::to_string(std::get<1>(v));
    case 2: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::get<2>(v));
      return std::string(buf, end);
    }
    case 3: return std::get<3>(v);
    case 4: return to_hex(std::get<4>(v).data);
    case 5: return std::get<5>(v) ? "true" : "false";
  }
  return {};
}

Value parse_value(std::string_view text, ColumnType type) {
  if (text.empty() && type != ColumnType::String && type != ColumnType::Bytes) return std::monostate{};
  switch (type) {
    case ColumnType::Int64: {
      std::int64_t out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(ErrorCode::InvalidArgument, "not an INT64: '" + std::string(text) + "'");
      }
      return out;
    }
    case ColumnType::Float64: {
      double out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(ErrorCode::InvalidArgument, "not a FLOAT64: '" + std::string(text) + "'");
      }
      return out;
    }
    case ColumnType::String: return std::string(text);
    case ColumnType::Bytes: return Bytes{from_hex(text)};
    case ColumnType::Bool: {
      if (text == "true" || text == "1" || text == "TRUE") return true;
      if (text == "false" || text == "0" || text == "FALSE") return false;
      fail(ErrorCode::InvalidArgument, "not a BOOL: '" + std::string(text) + "'");
    }
  }
  return std::monostate{};
}

std::optional<std::size_t> Schema::column_index(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Schema::key_indices() const {
  std::vector<std::size_t> out;
  out.reserve(primary_key.size());
  for (const auto& name : primary_key) {
    auto idx = column_index(name);
    if (!idx) fail(ErrorCode::InvalidSchema, "primary key column '" + name + "' not in schema");
    out.push_back(*idx);
  }
  return out;
}

std::vector<ColumnType> Schema::key_types() const {
  std::vector<ColumnType> out;
  for (auto idx : key_indices()) out.push_back(columns[idx].type);
  return out;
}

void Schema::validate() const {
  if (columns.empty()) fail(ErrorCode::InvalidSchema, "schema has no columns");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) fail(ErrorCode::InvalidSchema, "empty column name");
    if (!seen.insert(c.name).second) fail(ErrorCode::InvalidSchema, "duplicate column '" + c.name + "'");
  }
  std::unordered_set<std::string> key_seen;
  for (const auto& k : primary_key) {
    if (!seen.contains(k)) fail(ErrorCode::InvalidSchema, "primary key column '" + k + "' not in schema");
    if (!key_seen.insert(k).second) fail(ErrorCode::InvalidSchema, "primary key column '" + k + "' repeated");
  }
}

void Schema::check_row(const Row& row) const {
  if (row.size() != columns.size()) {
    fail(ErrorCode::SchemaMismatch, "row has " + std::to_string(row.size()) + " values, schema has " +
                                        std::to_string(columns.size()) + " columns");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!value_matches(row[i], columns[i].type)) {
      fail(ErrorCode::SchemaMismatch, "value for column '" + columns[i].name + "' is not " +
                                          std::string(to_string(columns[i].type)));
    }
  }
  for (auto idx : key_indices()) {
    if (is_null(row[idx])) fail(ErrorCode::PkViolation, "null primary key column '" + columns[idx].name + "'");
  }
}

std::uint64_t Schema::digest() const {
  std::string canon;
  ByteWriter w(canon);
  w.u32(static_cast<std::uint32_t>(columns.size()));
  for (const auto& c : columns) {
    w.bytes(c.name);
    w.u8(static_cast<std::uint8_t>(c.type));
  }
  w.u32(static_cast<std::uint32_t>(primary_key.size()));
  for (const auto& k : primary_key) w.bytes(k);
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(canon.data()), canon.size(), md);
  std::uint64_t out;
  std::memcpy(&out, md, sizeof out);
  return out;
}

}  // namespace tablevc
