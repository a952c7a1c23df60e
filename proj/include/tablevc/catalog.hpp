#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tablevc/manifest.hpp"
#include "tablevc/value.hpp"

namespace tablevc {

enum class TableId : std::uint64_t {};

struct SnapshotRef {
  enum class Kind { Current, Named, AtTimestamp };

  Kind kind = Kind::Current;
  TableId table{};
  std::string name;
  CommitTs ts = 0;

  static SnapshotRef current(TableId t) { return {Kind::Current, t, {}, 0}; }
  static SnapshotRef named(TableId t, std::string n) { return {Kind::Named, t, std::move(n), 0}; }
  static SnapshotRef at(TableId t, CommitTs ts) { return {Kind::AtTimestamp, t, {}, ts}; }
};

// Textual reference `TABLE`, `TABLE@SNAP` or `TABLE@ts:N`.
struct RefSpec {
  std::string table;
  SnapshotRef::Kind kind = SnapshotRef::Kind::Current;
  std::string snapshot;
  CommitTs ts = 0;

  static RefSpec parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const RefSpec&) const = default;
};

struct Lineage {
  TableId parent{};
  ManifestId manifest;
  std::optional<std::string> snapshot;
};

// An older manifest that was current for commits before `until`.
struct HistoryEntry {
  CommitTs until = 0;
  ManifestId manifest;
};

struct TableMeta {
  TableId id{};
  std::string name;
  Schema schema;
  CommitTs created_ts = 0;
  ManifestId current;
  std::map<std::string, ManifestId> snapshots;
  std::optional<Lineage> lineage;
  std::vector<HistoryEntry> history;
};

struct CatalogState {
  CommitTs clock = 0;
  std::uint64_t next_uniquifier = 1;
  std::optional<std::uint64_t> retention_commits;
  std::uint64_t next_table_id = 1;
  std::map<TableId, TableMeta> tables;

  TableMeta* find(std::string_view name);
  const TableMeta* find(std::string_view name) const;
};

// On disk the catalog is split into a root document with the counters and
// one document per table, so a commit rewrites only the table it touched.
// Table documents repeat the counters as of their last write; loading keeps
// the largest value seen.
std::string catalog_root_to_json(const CatalogState& state);
std::string table_to_json(const TableMeta& table, const CatalogState& state);
CatalogState catalog_from_json(const std::string& root, const std::vector<std::string>& tables);

}  // namespace tablevc
