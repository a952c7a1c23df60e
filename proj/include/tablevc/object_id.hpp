#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace tablevc {

// 128-bit time-ordered identifier: 48 bits of wall-clock milliseconds followed
// by 80 bits of randomness, incremented within the same millisecond so ids from
// one process are strictly increasing.
struct ObjectId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  static ObjectId generate();
  static ObjectId from_hex(std::string_view hex);
  std::string to_hex() const;
  bool is_nil() const noexcept { return hi == 0 && lo == 0; }

  auto operator<=>(const ObjectId&) const = default;
};

struct ObjectIdHash {
  std::size_t operator()(const ObjectId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.hi * 0x9e3779b97f4a7c15ULL ^ id.lo);
  }
};

// Physical address of a row: the object that holds it and its 0-based position.
struct RowId {
  ObjectId object;
  std::uint32_t offset = 0;

  auto operator<=>(const RowId&) const = default;
};

struct RowIdHash {
  std::size_t operator()(const RowId& r) const noexcept {
    return ObjectIdHash{}(r.object) ^ (static_cast<std::size_t>(r.offset) * 0xff51afd7ed558ccdULL);
  }
};

using CommitTs = std::uint64_t;
inline constexpr CommitTs kMaxTs = ~CommitTs{0};

}  // namespace tablevc

template <>
struct std::hash<tablevc::ObjectId> : tablevc::ObjectIdHash {};
template <>
struct std::hash<tablevc::RowId> : tablevc::RowIdHash {};
