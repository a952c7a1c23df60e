#pragma once

#include <cstdint>
#include <memory>

#include "tablevc/repository.hpp"

namespace tablevc {

struct CompactReport {
  std::shared_ptr<const Manifest> manifest;
  bool changed = false;
  std::size_t objects_before = 0;
  std::size_t objects_after = 0;
  std::size_t rows = 0;
  std::optional<CommitTs> committed_ts;
};

// Rewrites the visible rows of the table's current version into full, sorted
// objects without tombstones. Rows keep their commit timestamps but move to
// new addresses.
CompactReport compact(Repository& repo, TableId table);

struct GcReport {
  std::size_t objects_deleted = 0;
  std::uint64_t bytes_reclaimed = 0;
  std::size_t manifests_deleted = 0;
  std::size_t history_pruned = 0;
  std::size_t objects_kept = 0;
  bool dry_run = false;
};

// Deletes objects and manifests that no current version, named snapshot,
// clone base, open transaction or retained history entry refers to.
GcReport gc(Repository& repo, bool dry_run = false);

}  // namespace tablevc
