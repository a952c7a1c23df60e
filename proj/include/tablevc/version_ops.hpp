#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tablevc/manifest.hpp"
#include "tablevc/object_store.hpp"
#include "tablevc/repository.hpp"
#include "tablevc/value.hpp"

namespace tablevc {

// Rows of one object whose effective commit ts lies in (lo, hi].
struct ObjectWindow {
  ObjectId id;
  CommitTs lo = 0;
  CommitTs hi = kMaxTs;
  CommitTs stamp = 0;

  bool contains(CommitTs row_ts) const noexcept {
    auto e = stamp != 0 ? stamp : row_ts;
    return e > lo && e <= hi;
  }
};

struct DeltaSet {
  std::vector<ObjectWindow> added_data;
  std::vector<ObjectWindow> added_tombstones;
  std::vector<ObjectWindow> removed_data;
  std::vector<ObjectWindow> removed_tombstones;

  bool empty() const noexcept {
    return added_data.empty() && added_tombstones.empty() && removed_data.empty() && removed_tombstones.empty();
  }
};

DeltaSet compute_delta(const Manifest& snap, const Manifest& base);

// One logical change relative to the base. Deletes name the base row by its
// address; their non-key values are null until resolved.
struct SignedRow {
  int sign = 1;
  std::string key;
  Row values;
  bool values_known = true;
  RowId rowid;
};

struct DeltaScan {
  std::vector<SignedRow> rows;  // sorted by key, deletes first
  std::uint64_t base_digest = 0;
};

DeltaScan scan_delta(const ObjectStore& store, const Schema& schema, const Manifest& snap, const Manifest& base,
                     const DeltaSet& delta);
DeltaScan scan_delta(const ObjectStore& store, const Schema& schema, const Manifest& snap, const Manifest& base);

// Fills in values of deletes that are still pending lookup.
void resolve_values(const ObjectStore& store, std::vector<SignedRow>& rows);

struct AggregateGroup {
  std::string key;
  std::vector<SignedRow> a;
  std::vector<SignedRow> b;
  std::vector<SignedRow> cancelled_a;
  std::vector<SignedRow> cancelled_b;
};

// Groups by primary key, or for tables without one by deleted RowId and
// inserted row value. Identical changes on both sides cancel; groups where
// nothing survives are dropped unless `keep_cancelled`.
std::vector<AggregateGroup> diff_aggregate(const Schema& schema, const DeltaScan& a, const DeltaScan& b,
                                           bool keep_cancelled = false);

// Group-by key for a full row; wide values are replaced by a SHA-256 digest.
std::string row_fingerprint(const Row& row);

// Counts per distinct row value, verified by full comparison on lookup.
class RowCounter {
 public:
  std::int64_t& operator[](const Row& row);
  std::vector<std::pair<Row, std::int64_t>> take();
  std::size_t size() const noexcept { return size_; }

 private:
  std::unordered_map<std::string, std::vector<std::pair<Row, std::int64_t>>> map_;
  std::size_t size_ = 0;
};

struct DiffRow {
  std::int64_t diff_cnt = 0;
  Row values;

  bool operator==(const DiffRow& o) const { return diff_cnt == o.diff_cnt && rows_equal(values, o.values); }
};

void sort_diff_rows(const Schema& schema, std::vector<DiffRow>& rows);

enum class DiffPath { Auto, Fast, Fallback };

struct DiffOptions {
  std::optional<SnapshotRef> base;
  DiffPath path = DiffPath::Auto;
};

// Rows whose multiplicity differs, diff_cnt = count in b - count in a.
std::vector<DiffRow> snapshot_diff(Repository& repo, const SnapshotRef& a, const SnapshotRef& b,
                                   const DiffOptions& options = {});
std::vector<DiffRow> diff_fast(const ObjectStore& store, const Schema& schema, const Manifest& a, const Manifest& b,
                               const Manifest& base);
std::vector<DiffRow> diff_fallback(const ObjectStore& store, const Schema& schema, const Manifest& a,
                                   const Manifest& b);

}  // namespace tablevc
