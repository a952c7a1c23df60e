#include "tablevc/maintenance.hpp"

#include <algorithm>
#include <unordered_set>

#include "repo_impl.hpp"

namespace tablevc {

namespace {

bool already_compact(const Manifest& m, std::size_t rows, std::uint32_t object_rows) {
  if (!m.tombstones.empty()) return false;
  bool plain = std::all_of(m.data.begin(), m.data.end(),
                           [](const ObjectRef& r) { return r.cap == kMaxTs && r.stamp == 0; });
  return plain && m.data.size() == (rows + object_rows - 1) / object_rows;
}

}  // namespace

CompactReport compact(Repository& repo, TableId table) {
  auto& impl = repo.impl();
  std::lock_guard lock(impl.mu);
  impl.flush_locked(table);
  auto& meta = impl.table_locked(table);
  auto current = impl.manifests.read(meta.current);
  auto entries = scan_version(impl.store, *current);

  CompactReport report;
  report.objects_before = current->data.size() + current->tombstones.size();
  report.rows = entries.size();
  if (already_compact(*current, entries.size(), impl.options.object_rows)) {
    report.manifest = current;
    report.objects_after = report.objects_before;
    return report;
  }

  Manifest next;
  next.schema_hash = current->schema_hash;
  next.created_ts = impl.catalog.clock + 1;
  auto hash = meta.schema.digest();
  std::vector<StoredRow> chunk;
  for (std::size_t i = 0; i < entries.size(); i += impl.options.object_rows) {
    auto end = std::min(entries.size(), i + impl.options.object_rows);
    chunk.clear();
    for (auto j = i; j < end; ++j) chunk.push_back({entries[j].ts, std::move(entries[j].key), std::move(entries[j].values)});
    next.data.push_back({impl.store.write_data_object(chunk, hash), kMaxTs, 0});
  }
  next.normalize();
  auto id = impl.manifests.write(next);
  impl.replace_current_locked(table, id);

  report.changed = true;
  report.objects_after = next.data.size();
  report.manifest = impl.manifests.read(id);
  report.committed_ts = impl.catalog.clock;
  return report;
}

GcReport gc(Repository& repo, bool dry_run) {
  auto& impl = repo.impl();
  std::lock_guard lock(impl.mu);
  auto& cat = impl.catalog;

  CommitTs keep_after = 0;
  bool keep_all_history = !cat.retention_commits.has_value();
  if (!keep_all_history) keep_after = cat.clock > *cat.retention_commits ? cat.clock - *cat.retention_commits : 0;
  for (const auto& [tid, rt] : impl.runtime) {
    if (!rt.active.empty()) keep_after = std::min(keep_after, *rt.active.begin());
  }

  GcReport report;
  report.dry_run = dry_run;
  std::unordered_set<ManifestId, ObjectIdHash> live_manifests;
  std::vector<TableId> pruned;
  for (auto& [id, meta] : cat.tables) {
    live_manifests.insert(meta.current);
    for (const auto& [name, mid] : meta.snapshots) live_manifests.insert(mid);
    if (meta.lineage && impl.lineage_available_locked(*meta.lineage)) live_manifests.insert(meta.lineage->manifest);
    auto before = meta.history.size();
    std::vector<HistoryEntry> kept;
    for (const auto& h : meta.history) {
      if (keep_all_history || h.until > keep_after) kept.push_back(h);
    }
    report.history_pruned += before - kept.size();
    if (kept.size() != before) pruned.push_back(id);
    for (const auto& h : kept) live_manifests.insert(h.manifest);
    if (!dry_run) meta.history = std::move(kept);
  }

  std::unordered_set<ObjectId, ObjectIdHash> live_objects(impl.active_spills.begin(), impl.active_spills.end());
  for (const auto& mid : live_manifests) {
    auto m = impl.manifests.read(mid);
    for (const auto& r : m->data) live_objects.insert(r.id);
    for (const auto& r : m->tombstones) live_objects.insert(r.id);
  }

  if (!dry_run) {
    for (auto id : pruned) impl.save_table_locked(id);
  }
  for (const auto& obj : impl.store.list()) {
    if (live_objects.count(obj.id) != 0) {
      ++report.objects_kept;
      continue;
    }
    ++report.objects_deleted;
    report.bytes_reclaimed += dry_run ? obj.bytes : impl.store.remove(obj.id, obj.kind);
  }
  for (const auto& mid : impl.manifests.list()) {
    if (live_manifests.count(mid) != 0) continue;
    ++report.manifests_deleted;
    if (!dry_run) report.bytes_reclaimed += impl.manifests.remove(mid);
  }
  return report;
}

}  // namespace tablevc
