#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tablevc/catalog.hpp"
#include "tablevc/manifest.hpp"
#include "tablevc/object_store.hpp"
#include "tablevc/value.hpp"

namespace tablevc {

namespace detail {
class RepoImpl;
struct TxnState;
}  // namespace detail

struct RepoOptions {
  std::uint32_t object_rows = 8192;  // tail flush threshold and compaction target
  std::uint32_t spill_rows = 8192;   // transaction workspace spill threshold
  std::uint32_t group_rows = 64;
  bool sync = true;
};

// A row as stored: its sort key, physical address and effective commit ts.
struct ScanEntry {
  std::string key;
  RowId rowid;
  CommitTs ts = 0;
  Row values;
};

// A frozen table version. `id` is set when the manifest exists on disk as is.
struct Version {
  TableId table{};
  Schema schema;
  std::shared_ptr<const Manifest> manifest;
  std::optional<ManifestId> id;
};

struct SnapshotInfo {
  std::string name;
  ManifestId manifest;
  CommitTs created_ts = 0;
};

struct IoStats {
  std::uint64_t object_bytes = 0;
  std::uint64_t manifest_bytes = 0;
  std::uint64_t catalog_bytes = 0;

  std::uint64_t total() const noexcept { return object_bytes + manifest_bytes + catalog_bytes; }
};

using Predicate = std::vector<std::pair<std::string, Value>>;
using Assignments = std::vector<std::pair<std::string, Value>>;

class Transaction {
 public:
  Transaction(Transaction&&) noexcept;
  Transaction& operator=(Transaction&&) noexcept;
  ~Transaction();

  TableId table() const;
  CommitTs read_ts() const;

  void insert(std::span<const Row> rows);
  // Keys are primary-key tuples; for tables without a key, a one-element
  // tuple holding the row's uniquifier.
  std::size_t delete_keys(std::span<const std::vector<Value>> keys);
  std::size_t delete_where(const Predicate& where);
  std::size_t update_keys(std::span<const std::vector<Value>> keys, const Assignments& set);
  std::size_t update_where(const Predicate& where, const Assignments& set);

  // The transaction's own view: its snapshot plus staged changes, key order.
  std::vector<ScanEntry> scan() const;

  // Staging with the physical target already known; no key lookups.
  void stage_delete_at(const std::string& key, RowId target);
  void stage_insert_unchecked(Row values);

  std::size_t staged_inserts() const;
  std::size_t staged_deletes() const;
  std::size_t spilled_objects() const;

  CommitTs commit();
  void abort();

 private:
  friend class Repository;
  explicit Transaction(std::unique_ptr<detail::TxnState> state);

  std::unique_ptr<detail::TxnState> state_;
};

class Repository {
 public:
  static Repository init(const std::filesystem::path& root, std::optional<std::uint64_t> retention_commits = std::nullopt,
                         RepoOptions options = {});
  static Repository open(const std::filesystem::path& root, RepoOptions options = {});

  const std::filesystem::path& root() const;
  const RepoOptions& options() const;

  TableId create_table(const std::string& name, const Schema& schema);
  void drop_table(TableId table);
  TableId table_id(std::string_view name) const;
  std::optional<TableId> find_table(std::string_view name) const;
  std::string table_name(TableId table) const;
  Schema schema(TableId table) const;
  std::vector<std::string> table_names() const;

  SnapshotRef ref(const RefSpec& spec) const;
  SnapshotRef ref(std::string_view text) const;
  RefSpec spec(const SnapshotRef& ref) const;

  SnapshotRef create_snapshot(TableId table, const std::string& name);
  void drop_snapshot(TableId table, const std::string& name);
  std::vector<SnapshotInfo> list_snapshots(TableId table) const;

  // Manifest-level resolution; Current and current-epoch timestamp refs flush
  // the table's tail first.
  Version resolve(const SnapshotRef& ref);
  TableId clone_table(const SnapshotRef& src, const std::string& dst_name);
  void restore_table(TableId table, const SnapshotRef& src);
  std::optional<Version> find_common_base(TableId target, const SnapshotRef& source) const;

  Transaction begin(TableId table);
  std::vector<Row> scan(const SnapshotRef& ref) const;
  std::vector<ScanEntry> scan_entries(const SnapshotRef& ref) const;
  void flush(TableId table);

  CommitTs clock() const;
  std::optional<std::uint64_t> retention_commits() const;
  IoStats io_stats() const;

  ObjectStore& store();
  const ObjectStore& store() const;
  detail::RepoImpl& impl() { return *impl_; }
  const detail::RepoImpl& impl() const { return *impl_; }

 private:
  explicit Repository(std::shared_ptr<detail::RepoImpl> impl);

  std::shared_ptr<detail::RepoImpl> impl_;
};

// Rows of a version (manifest level, no tail), key order.
std::vector<ScanEntry> scan_version(const ObjectStore& store, const Manifest& m);

}  // namespace tablevc
