#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "tablevc/catalog.hpp"
#include "tablevc/manifest.hpp"
#include "tablevc/object_store.hpp"
#include "tablevc/repository.hpp"

namespace tablevc::detail {

// Rows and tombstones of one commit while they live in the in-memory tail.
// Tail rows are addressed as (tail id, first_offset + index).
struct TailBatch {
  CommitTs ts = 0;
  std::uint32_t first_offset = 0;
  std::vector<StoredRow> rows;
  std::vector<TombstoneEntry> tombs;
};

struct CommitRecord {
  CommitTs ts = 0;
  std::vector<std::string> keys;  // sorted
};

struct TableRuntime {
  ObjectId tail_id = ObjectId::generate();
  std::vector<std::shared_ptr<const TailBatch>> tail;
  std::uint32_t tail_rows = 0;
  // Tail addresses rewritten by flushes while transactions were open.
  std::unordered_map<RowId, RowId, RowIdHash> flushed_remap;
  std::deque<CommitRecord> recent;
  CommitTs last_rewrite_ts = 0;
  std::multiset<CommitTs> active;
};

struct View {
  Schema schema;
  std::shared_ptr<const Manifest> manifest;
  std::optional<ManifestId> id;
  std::vector<std::shared_ptr<const TailBatch>> tail;
  ObjectId tail_id;
};

class DeadSet {
 public:
  DeadSet(const ObjectStore& store, const View& view);
  bool contains(const RowId& r) const { return base_->count(r) != 0 || extra_.count(r) != 0; }

 private:
  std::shared_ptr<const RowIdSet> base_;
  RowIdSet extra_;
};

std::vector<ScanEntry> scan_view(const ObjectStore& store, const View& view);
// Visible rows for each key of `sorted_keys` (ascending, unique), aligned.
std::vector<std::vector<ScanEntry>> lookup_view(const ObjectStore& store, const View& view, const DeadSet& dead,
                                                const std::vector<std::string>& sorted_keys);
std::shared_ptr<const ObjectReader> data_reader(const ObjectStore& store, const ObjectId& id);

class RepoImpl {
 public:
  RepoImpl(std::filesystem::path root, RepoOptions options, CatalogState catalog);
  // Writes out committed rows still held in memory.
  ~RepoImpl();

  std::filesystem::path root;
  RepoOptions options;
  ObjectStore store;
  ManifestStore manifests;

  mutable std::mutex mu;
  CatalogState catalog;
  std::unordered_map<std::uint64_t, TableRuntime> runtime;
  std::unordered_multiset<ObjectId, ObjectIdHash> active_spills;
  std::uint64_t catalog_bytes = 0;

  // All *_locked members expect `mu` to be held.
  TableMeta& table_locked(TableId id);
  const TableMeta& table_locked(TableId id) const;
  TableRuntime& runtime_locked(TableId id);
  void save_root_locked();
  void save_table_locked(TableId id);
  void remove_table_file_locked(TableId id);
  void flush_locked(TableId id);
  void check_retention_locked(CommitTs ts) const;
  std::shared_ptr<const Manifest> empty_manifest(const Schema& schema) const;

  // View of the table as of `ts`, optionally including the in-memory tail.
  View view_at_locked(TableId id, CommitTs ts, bool with_tail) const;
  View view_locked(const SnapshotRef& ref, bool with_tail) const;
  // Manifest-level resolution (flushes the tail when the ref can see it).
  Version resolve_locked(const SnapshotRef& ref);
  bool lineage_available_locked(const Lineage& l) const;
  ManifestId persist_locked(const Version& v);
  void replace_current_locked(TableId id, ManifestId next);
};

struct PendingRow {
  std::string key;
  Row values;
  bool erased = false;
};

struct PendingDelete {
  std::string key;
  RowId target;
};

struct KeyState {
  bool deleted_committed = false;
  // Index into pending, or the address inside one of our spilled objects.
  std::variant<std::monostate, std::size_t, RowId> inserted;
};

struct TxnState {
  std::shared_ptr<RepoImpl> repo;
  TableId table{};
  CommitTs read_ts = 0;
  Schema schema;
  std::vector<std::size_t> key_indices;
  bool has_pk = false;
  bool finished = false;

  std::vector<PendingRow> pending;
  std::size_t pending_live = 0;
  std::vector<ObjectId> spills;
  std::size_t spilled_rows = 0;
  std::vector<PendingDelete> deletes;
  RowIdSet deleted_targets;
  std::unordered_map<std::string, KeyState> keys;
  std::size_t committed_deletes = 0;
};

}  // namespace tablevc::detail
