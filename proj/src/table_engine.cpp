#include <algorithm>
#include <numeric>

#include "repo_impl.hpp"
#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

namespace detail {

namespace {

bool entry_less(const ScanEntry& a, const ScanEntry& b) {
  if (a.key != b.key) return a.key < b.key;
  if (a.ts != b.ts) return a.ts < b.ts;
  return a.rowid < b.rowid;
}

}  // namespace

std::shared_ptr<const ObjectReader> data_reader(const ObjectStore& store, const ObjectId& id) {
  try {
    return store.reader(id, ObjectKind::Data);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) fail(ErrorCode::MissingObject, e.what());
    throw;
  }
}

DeadSet::DeadSet(const ObjectStore& store, const View& view) : base_(store.dead_rows(view.manifest->tombstones)) {
  for (const auto& batch : view.tail) {
    for (const auto& t : batch->tombs) extra_.insert(t.target);
  }
}

std::vector<ScanEntry> scan_view(const ObjectStore& store, const View& view) {
  DeadSet dead(store, view);
  std::vector<ScanEntry> out;
  for (const auto& ref : view.manifest->data) {
    auto rows = data_reader(store, ref.id)->all_rows();
    for (std::uint32_t i = 0; i < rows.size(); ++i) {
      auto& r = rows[i];
      if (!ref.admits(r.ts)) continue;
      RowId rid{ref.id, i};
      if (dead.contains(rid)) continue;
      out.push_back({std::move(r.key), rid, ref.effective(r.ts), std::move(r.values)});
    }
  }
  for (const auto& batch : view.tail) {
    for (std::uint32_t i = 0; i < batch->rows.size(); ++i) {
      RowId rid{view.tail_id, batch->first_offset + i};
      if (dead.contains(rid)) continue;
      const auto& r = batch->rows[i];
      out.push_back({r.key, rid, r.ts, r.values});
    }
  }
  std::sort(out.begin(), out.end(), entry_less);
  return out;
}

std::vector<std::vector<ScanEntry>> lookup_view(const ObjectStore& store, const View& view, const DeadSet& dead,
                                                const std::vector<std::string>& sorted_keys) {
  std::vector<std::vector<ScanEntry>> out(sorted_keys.size());
  if (sorted_keys.empty()) return out;
  for (const auto& ref : view.manifest->data) {
    auto rd = data_reader(store, ref.id);
    auto k = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), rd->min_key());
    std::unordered_map<std::size_t, std::vector<StoredRow>> decoded;
    for (; k != sorted_keys.end() && *k <= rd->max_key(); ++k) {
      auto [glo, ghi] = rd->groups_for_key(*k);
      for (auto g = glo; g < ghi; ++g) {
        auto it = decoded.find(g);
        if (it == decoded.end()) it = decoded.emplace(g, rd->rows_in_group(g)).first;
        const auto& rows = it->second;
        auto pos = std::lower_bound(rows.begin(), rows.end(), *k,
                                    [](const StoredRow& r, const std::string& key) { return r.key < key; });
        for (; pos != rows.end() && pos->key == *k; ++pos) {
          if (!ref.admits(pos->ts)) continue;
          RowId rid{ref.id, rd->groups()[g].first_record + static_cast<std::uint32_t>(pos - rows.begin())};
          if (dead.contains(rid)) continue;
          out[k - sorted_keys.begin()].push_back({pos->key, rid, ref.effective(pos->ts), pos->values});
        }
      }
    }
  }
  for (const auto& batch : view.tail) {
    for (std::uint32_t i = 0; i < batch->rows.size(); ++i) {
      const auto& r = batch->rows[i];
      auto k = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), r.key);
      if (k == sorted_keys.end() || *k != r.key) continue;
      RowId rid{view.tail_id, batch->first_offset + i};
      if (dead.contains(rid)) continue;
      out[k - sorted_keys.begin()].push_back({r.key, rid, r.ts, r.values});
    }
  }
  return out;
}

void RepoImpl::flush_locked(TableId id) {
  auto& meta = table_locked(id);
  auto& rt = runtime_locked(id);
  if (rt.tail.empty()) return;

  struct Slot {
    const StoredRow* row;
    std::uint32_t old_offset;
  };
  std::vector<Slot> slots;
  slots.reserve(rt.tail_rows);
  std::vector<TombstoneEntry> tombs;
  for (const auto& batch : rt.tail) {
    for (std::uint32_t i = 0; i < batch->rows.size(); ++i) slots.push_back({&batch->rows[i], batch->first_offset + i});
    tombs.insert(tombs.end(), batch->tombs.begin(), batch->tombs.end());
  }
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.row->key != b.row->key) return a.row->key < b.row->key;
    return a.row->ts < b.row->ts;
  });

  auto current = manifests.read(meta.current);
  Manifest next = *current;
  std::unordered_map<RowId, RowId, RowIdHash> remap;
  if (!slots.empty()) {
    std::vector<StoredRow> rows;
    rows.reserve(slots.size());
    for (const auto& s : slots) rows.push_back(*s.row);
    auto oid = store.write_data_object(rows, meta.schema.digest());
    for (std::uint32_t i = 0; i < slots.size(); ++i) remap[{rt.tail_id, slots[i].old_offset}] = {oid, i};
    next.data.push_back({oid, kMaxTs, 0});
  }
  if (!tombs.empty()) {
    for (auto& t : tombs) {
      if (auto it = remap.find(t.target); it != remap.end()) t.target = it->second;
    }
    std::stable_sort(tombs.begin(), tombs.end(), [](const TombstoneEntry& a, const TombstoneEntry& b) {
      if (a.key != b.key) return a.key < b.key;
      return a.ts < b.ts;
    });
    auto tid = store.write_tombstone_object(tombs);
    next.tombstones.push_back({tid, kMaxTs, 0});
  }
  next.created_ts = catalog.clock;
  next.normalize();
  meta.current = manifests.write(next);

  if (rt.active.empty()) {
    rt.flushed_remap.clear();
  } else {
    rt.flushed_remap.merge(remap);
  }
  rt.tail.clear();
  rt.tail_rows = 0;
  rt.tail_id = ObjectId::generate();
  save_table_locked(id);
}

View RepoImpl::view_at_locked(TableId id, CommitTs ts, bool with_tail) const {
  const auto& meta = table_locked(id);
  View v;
  v.schema = meta.schema;
  if (ts < meta.created_ts) {
    v.manifest = empty_manifest(meta.schema);
    return v;
  }
  for (const auto& h : meta.history) {
    if (ts < h.until) {
      auto m = manifests.read(h.manifest);
      if (ts >= m->created_ts) {
        v.manifest = m;
        v.id = h.manifest;
      } else {
        v.manifest = std::make_shared<const Manifest>(cap_manifest(*m, ts));
      }
      return v;
    }
  }
  auto m = manifests.read(meta.current);
  if (ts >= m->created_ts) {
    v.manifest = m;
    v.id = meta.current;
  } else {
    v.manifest = std::make_shared<const Manifest>(cap_manifest(*m, ts));
  }
  if (with_tail) {
    auto it = runtime.find(static_cast<std::uint64_t>(id));
    if (it != runtime.end()) {
      v.tail_id = it->second.tail_id;
      for (const auto& b : it->second.tail) {
        if (b->ts <= ts) v.tail.push_back(b);
      }
    }
  }
  return v;
}

View RepoImpl::view_locked(const SnapshotRef& ref, bool with_tail) const {
  const auto& meta = table_locked(ref.table);
  switch (ref.kind) {
    case SnapshotRef::Kind::Current: return view_at_locked(ref.table, kMaxTs, with_tail);
    case SnapshotRef::Kind::Named: {
      auto it = meta.snapshots.find(ref.name);
      if (it == meta.snapshots.end()) {
        fail(ErrorCode::UnknownSnapshot, "table '" + meta.name + "' has no snapshot '" + ref.name + "'");
      }
      View v;
      v.schema = meta.schema;
      v.manifest = manifests.read(it->second);
      v.id = it->second;
      return v;
    }
    case SnapshotRef::Kind::AtTimestamp:
      check_retention_locked(ref.ts);
      return view_at_locked(ref.table, ref.ts, with_tail);
  }
  fail(ErrorCode::Internal, "bad snapshot ref");
}

}  // namespace detail

using detail::KeyState;
using detail::TxnState;

namespace {

struct OwnEntry {
  ScanEntry entry;
  enum class Origin { Committed, Pending, Spilled } origin = Origin::Committed;
  std::size_t pending_index = 0;
};

detail::View txn_view(const TxnState& s) {
  std::lock_guard lock(s.repo->mu);
  return s.repo->view_at_locked(s.table, s.read_ts, true);
}

void require_open(const TxnState* s) {
  if (s == nullptr || s->finished) fail(ErrorCode::InvalidArgument, "transaction is no longer open");
}

std::string key_for_tuple(const TxnState& s, const std::vector<Value>& tuple) {
  if (!s.has_pk) {
    if (tuple.size() != 1 || tuple[0].index() != 1) {
      fail(ErrorCode::InvalidArgument, "rows of a table without primary key are addressed by an INT64 uniquifier");
    }
    return encode_uniquifier(static_cast<std::uint64_t>(std::get<std::int64_t>(tuple[0])));
  }
  if (tuple.size() != s.key_indices.size()) fail(ErrorCode::InvalidArgument, "key tuple has the wrong arity");
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    const auto& col = s.schema.columns[s.key_indices[i]];
    if (is_null(tuple[i]) || !value_matches(tuple[i], col.type)) {
      fail(ErrorCode::InvalidArgument, "key value for '" + col.name + "' has the wrong type");
    }
  }
  return encode_key_values(tuple);
}

std::vector<std::pair<std::size_t, Value>> bind_columns(const Schema& schema, const Predicate& cols) {
  std::vector<std::pair<std::size_t, Value>> out;
  for (const auto& [name, value] : cols) {
    auto idx = schema.column_index(name);
    if (!idx) fail(ErrorCode::InvalidArgument, "unknown column '" + name + "'");
    if (!value_matches(value, schema.columns[*idx].type)) {
      fail(ErrorCode::InvalidArgument, "value for '" + name + "' has the wrong type");
    }
    out.emplace_back(*idx, value);
  }
  return out;
}

std::vector<std::string> sorted_unique(std::vector<std::string> keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

std::vector<OwnEntry> own_scan(const TxnState& s) {
  auto view = txn_view(s);
  std::vector<OwnEntry> out;
  for (auto& e : detail::scan_view(s.repo->store, view)) {
    if (s.deleted_targets.count(e.rowid) != 0) continue;
    out.push_back({std::move(e), OwnEntry::Origin::Committed, 0});
  }
  for (const auto& id : s.spills) {
    auto rows = detail::data_reader(s.repo->store, id)->all_rows();
    for (std::uint32_t i = 0; i < rows.size(); ++i) {
      RowId rid{id, i};
      if (s.deleted_targets.count(rid) != 0) continue;
      out.push_back({{std::move(rows[i].key), rid, 0, std::move(rows[i].values)}, OwnEntry::Origin::Spilled, 0});
    }
  }
  for (std::size_t i = 0; i < s.pending.size(); ++i) {
    const auto& p = s.pending[i];
    if (p.erased) continue;
    out.push_back({{p.key, RowId{ObjectId{}, static_cast<std::uint32_t>(i)}, 0, p.values}, OwnEntry::Origin::Pending, i});
  }
  std::sort(out.begin(), out.end(), [](const OwnEntry& a, const OwnEntry& b) {
    if (a.entry.key != b.entry.key) return a.entry.key < b.entry.key;
    return a.entry.rowid < b.entry.rowid;
  });
  return out;
}

void spill(TxnState& s) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < s.pending.size(); ++i) {
    if (!s.pending[i].erased) live.push_back(i);
  }
  if (!live.empty()) {
    std::sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) { return s.pending[a].key < s.pending[b].key; });
    std::vector<StoredRow> rows;
    rows.reserve(live.size());
    for (auto i : live) rows.push_back({0, s.pending[i].key, std::move(s.pending[i].values)});
    auto id = s.repo->store.write_data_object(rows, s.schema.digest());
    {
      std::lock_guard lock(s.repo->mu);
      s.repo->active_spills.insert(id);
    }
    s.spills.push_back(id);
    for (std::uint32_t j = 0; j < rows.size(); ++j) s.keys[rows[j].key].inserted = RowId{id, j};
    s.spilled_rows += rows.size();
  }
  s.pending.clear();
  s.pending_live = 0;
}

void stage_insert(TxnState& s, std::string key, Row values) {
  s.keys[key].inserted = s.pending.size();
  s.pending.push_back({std::move(key), std::move(values), false});
  ++s.pending_live;
  if (s.pending_live >= s.repo->options.spill_rows) spill(s);
}

std::vector<std::string> allocate_uniquifiers(TxnState& s, std::size_t n) {
  std::uint64_t first;
  {
    std::lock_guard lock(s.repo->mu);
    first = s.repo->catalog.next_uniquifier;
    s.repo->catalog.next_uniquifier += n;
  }
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(encode_uniquifier(first + i));
  return out;
}

// Removes a row the transaction itself inserted.
void erase_own(TxnState& s, const std::string& key, KeyState& st) {
  if (auto* idx = std::get_if<std::size_t>(&st.inserted)) {
    s.pending[*idx].erased = true;
    --s.pending_live;
  } else if (auto* rid = std::get_if<RowId>(&st.inserted)) {
    s.deletes.push_back({key, *rid});
    s.deleted_targets.insert(*rid);
    --s.spilled_rows;
  }
  st.inserted = std::monostate{};
  if (!st.deleted_committed) s.keys.erase(key);
}

void delete_committed(TxnState& s, const std::string& key, const RowId& target) {
  if (!s.deleted_targets.insert(target).second) return;
  s.deletes.push_back({key, target});
  s.keys[key].deleted_committed = true;
  ++s.committed_deletes;
}

std::size_t delete_entries(TxnState& s, const std::vector<OwnEntry>& entries) {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.origin == OwnEntry::Origin::Committed) {
      delete_committed(s, e.entry.key, e.entry.rowid);
    } else {
      erase_own(s, e.entry.key, s.keys[e.entry.key]);
    }
    ++n;
  }
  return n;
}

// Live rows for the given keys in the transaction's own view.
std::vector<OwnEntry> own_lookup(const TxnState& s, const std::vector<std::string>& sorted_keys) {
  std::vector<OwnEntry> out;
  std::vector<std::string> committed;
  for (const auto& k : sorted_keys) {
    auto it = s.keys.find(k);
    if (it == s.keys.end()) {
      committed.push_back(k);
      continue;
    }
    const auto& st = it->second;
    if (auto* idx = std::get_if<std::size_t>(&st.inserted)) {
      const auto& p = s.pending[*idx];
      out.push_back({{p.key, RowId{ObjectId{}, static_cast<std::uint32_t>(*idx)}, 0, p.values},
                     OwnEntry::Origin::Pending, *idx});
    } else if (auto* rid = std::get_if<RowId>(&st.inserted)) {
      auto row = detail::data_reader(s.repo->store, rid->object)->row_at(rid->offset);
      out.push_back({{row.key, *rid, 0, std::move(row.values)}, OwnEntry::Origin::Spilled, 0});
    }
  }
  if (!committed.empty()) {
    auto view = txn_view(s);
    detail::DeadSet dead(s.repo->store, view);
    auto hits = detail::lookup_view(s.repo->store, view, dead, committed);
    for (auto& per_key : hits) {
      for (auto& e : per_key) {
        if (s.deleted_targets.count(e.rowid) != 0) continue;
        out.push_back({std::move(e), OwnEntry::Origin::Committed, 0});
      }
    }
  }
  return out;
}

std::vector<OwnEntry> matching(const TxnState& s, const Predicate& where) {
  auto bound = bind_columns(s.schema, where);
  std::vector<OwnEntry> out;
  for (auto& e : own_scan(s)) {
    bool ok = std::all_of(bound.begin(), bound.end(), [&](const auto& b) {
      return compare_values(e.entry.values[b.first], b.second) == 0;
    });
    if (ok) out.push_back(std::move(e));
  }
  return out;
}

std::size_t update_entries(TxnState& s, const std::vector<OwnEntry>& targets, const Assignments& set) {
  auto bound = bind_columns(s.schema, set);
  std::vector<Row> rows;
  rows.reserve(targets.size());
  for (const auto& t : targets) {
    Row r = t.entry.values;
    for (const auto& [idx, v] : bound) r[idx] = v;
    s.schema.check_row(r);
    rows.push_back(std::move(r));
  }
  std::vector<std::string> new_keys;
  if (s.has_pk) {
    std::unordered_set<std::string> old_keys;
    for (const auto& t : targets) old_keys.insert(t.entry.key);
    std::unordered_set<std::string> seen;
    std::vector<std::string> outside;
    for (const auto& r : rows) {
      auto k = encode_key(r, s.key_indices);
      if (!seen.insert(k).second) fail(ErrorCode::PkViolation, "update maps two rows to one primary key");
      if (!old_keys.count(k)) outside.push_back(k);
      new_keys.push_back(std::move(k));
    }
    if (!own_lookup(s, sorted_unique(outside)).empty()) {
      fail(ErrorCode::PkViolation, "update moves a row onto a live primary key");
    }
  } else {
    new_keys = allocate_uniquifiers(s, rows.size());
  }
  delete_entries(s, targets);
  for (std::size_t i = 0; i < rows.size(); ++i) stage_insert(s, std::move(new_keys[i]), std::move(rows[i]));
  return targets.size();
}

}  // namespace

Transaction::Transaction(std::unique_ptr<detail::TxnState> state) : state_(std::move(state)) {}
Transaction::Transaction(Transaction&&) noexcept = default;
Transaction& Transaction::operator=(Transaction&& other) noexcept {
  if (this != &other) {
    if (state_ && !state_->finished) {
      try {
        abort();
      } catch (...) {
      }
    }
    state_ = std::move(other.state_);
  }
  return *this;
}

Transaction::~Transaction() {
  if (state_ && !state_->finished) {
    try {
      abort();
    } catch (...) {
    }
  }
}

TableId Transaction::table() const { return state_->table; }
CommitTs Transaction::read_ts() const { return state_->read_ts; }
std::size_t Transaction::staged_inserts() const { return state_->pending_live + state_->spilled_rows; }
std::size_t Transaction::staged_deletes() const { return state_->committed_deletes; }
std::size_t Transaction::spilled_objects() const { return state_->spills.size(); }

void Transaction::insert(std::span<const Row> rows) {
  require_open(state_.get());
  auto& s = *state_;
  for (const auto& r : rows) s.schema.check_row(r);
  std::vector<std::string> keys;
  if (s.has_pk) {
    keys.reserve(rows.size());
    std::unordered_set<std::string_view> seen;
    std::vector<std::string> unknown;
    for (const auto& r : rows) keys.push_back(encode_key(r, s.key_indices));
    for (const auto& k : keys) {
      if (!seen.insert(k).second) fail(ErrorCode::PkViolation, "duplicate primary key within insert");
      auto it = s.keys.find(k);
      if (it == s.keys.end()) {
        unknown.push_back(k);
      } else if (!std::holds_alternative<std::monostate>(it->second.inserted)) {
        fail(ErrorCode::PkViolation, "primary key already inserted in this transaction");
      }
    }
    if (!unknown.empty()) {
      auto view = txn_view(s);
      detail::DeadSet dead(s.repo->store, view);
      auto sorted = sorted_unique(std::move(unknown));
      auto hits = detail::lookup_view(s.repo->store, view, dead, sorted);
      for (const auto& h : hits) {
        if (!h.empty()) fail(ErrorCode::PkViolation, "primary key already exists");
      }
    }
  } else {
    keys = allocate_uniquifiers(s, rows.size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) stage_insert(s, std::move(keys[i]), rows[i]);
}

std::size_t Transaction::delete_keys(std::span<const std::vector<Value>> tuples) {
  require_open(state_.get());
  auto& s = *state_;
  std::vector<std::string> keys;
  for (const auto& t : tuples) keys.push_back(key_for_tuple(s, t));
  return delete_entries(s, own_lookup(s, sorted_unique(std::move(keys))));
}

std::size_t Transaction::delete_where(const Predicate& where) {
  require_open(state_.get());
  return delete_entries(*state_, matching(*state_, where));
}

std::size_t Transaction::update_keys(std::span<const std::vector<Value>> tuples, const Assignments& set) {
  require_open(state_.get());
  auto& s = *state_;
  std::vector<std::string> keys;
  for (const auto& t : tuples) keys.push_back(key_for_tuple(s, t));
  return update_entries(s, own_lookup(s, sorted_unique(std::move(keys))), set);
}

std::size_t Transaction::update_where(const Predicate& where, const Assignments& set) {
  require_open(state_.get());
  return update_entries(*state_, matching(*state_, where), set);
}

std::vector<ScanEntry> Transaction::scan() const {
  require_open(state_.get());
  std::vector<ScanEntry> out;
  for (auto& e : own_scan(*state_)) out.push_back(std::move(e.entry));
  return out;
}

void Transaction::stage_delete_at(const std::string& key, RowId target) {
  require_open(state_.get());
  delete_committed(*state_, key, target);
}

void Transaction::stage_insert_unchecked(Row values) {
  require_open(state_.get());
  auto& s = *state_;
  s.schema.check_row(values);
  std::string key = s.has_pk ? encode_key(values, s.key_indices) : allocate_uniquifiers(s, 1).front();
  stage_insert(s, std::move(key), std::move(values));
}

CommitTs Transaction::commit() {
  require_open(state_.get());
  auto& s = *state_;
  auto& repo = *s.repo;
  std::lock_guard lock(repo.mu);
  auto& rt = repo.runtime_locked(s.table);
  repo.table_locked(s.table);

  auto finish = [&] {
    s.finished = true;
    if (auto it = rt.active.find(s.read_ts); it != rt.active.end()) rt.active.erase(it);
    for (const auto& id : s.spills) {
      if (auto it = repo.active_spills.find(id); it != repo.active_spills.end()) repo.active_spills.erase(it);
    }
    if (rt.active.empty()) {
      rt.recent.clear();
      rt.flushed_remap.clear();
    } else {
      auto oldest = *rt.active.begin();
      while (!rt.recent.empty() && rt.recent.front().ts <= oldest) rt.recent.pop_front();
    }
  };

  std::size_t live_inserts = s.pending_live + s.spilled_rows;
  bool has_changes = !s.deletes.empty() || live_inserts > 0;
  if (!has_changes) {
    finish();
    return repo.catalog.clock;
  }

  std::vector<std::string> touched;
  for (const auto& [k, st] : s.keys) {
    if (s.has_pk || st.deleted_committed) touched.push_back(k);
  }
  std::sort(touched.begin(), touched.end());

  try {
    if (rt.last_rewrite_ts > s.read_ts && (s.committed_deletes > 0 || (s.has_pk && live_inserts > 0))) {
      fail(ErrorCode::WriteConflict, "table was rewritten after the transaction began");
    }
    for (const auto& rec : rt.recent) {
      if (rec.ts <= s.read_ts) continue;
      auto a = touched.begin();
      auto b = rec.keys.begin();
      while (a != touched.end() && b != rec.keys.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          fail(ErrorCode::WriteConflict, "a concurrent commit changed the same keys");
        }
      }
    }
  } catch (...) {
    finish();
    throw;
  }

  auto ts = ++repo.catalog.clock;
  auto batch = std::make_shared<detail::TailBatch>();
  batch->ts = ts;
  batch->first_offset = rt.tail_rows;
  for (auto& p : s.pending) {
    if (!p.erased) batch->rows.push_back({ts, std::move(p.key), std::move(p.values)});
  }
  for (auto& d : s.deletes) {
    auto target = d.target;
    if (auto it = rt.flushed_remap.find(target); it != rt.flushed_remap.end()) target = it->second;
    batch->tombs.push_back({ts, std::move(d.key), target});
  }
  if (!s.spills.empty()) {
    auto& meta = repo.table_locked(s.table);
    Manifest next = *repo.manifests.read(meta.current);
    for (const auto& id : s.spills) next.data.push_back({id, kMaxTs, ts});
    next.created_ts = ts;
    next.normalize();
    meta.current = repo.manifests.write(next);
    repo.save_table_locked(s.table);
  }
  if (!batch->rows.empty() || !batch->tombs.empty()) {
    rt.tail_rows += static_cast<std::uint32_t>(batch->rows.size());
    rt.tail.push_back(std::move(batch));
  }
  rt.recent.push_back({ts, std::move(touched)});
  finish();
  if (rt.tail_rows >= repo.options.object_rows) repo.flush_locked(s.table);
  return ts;
}

void Transaction::abort() {
  if (!state_ || state_->finished) return;
  auto& s = *state_;
  std::lock_guard lock(s.repo->mu);
  s.finished = true;
  auto it = s.repo->runtime.find(static_cast<std::uint64_t>(s.table));
  if (it != s.repo->runtime.end()) {
    auto& rt = it->second;
    if (auto a = rt.active.find(s.read_ts); a != rt.active.end()) rt.active.erase(a);
    if (rt.active.empty()) {
      rt.recent.clear();
      rt.flushed_remap.clear();
    }
  }
  for (const auto& id : s.spills) {
    if (auto sp = s.repo->active_spills.find(id); sp != s.repo->active_spills.end()) s.repo->active_spills.erase(sp);
  }
}

Transaction Repository::begin(TableId table) {
  auto s = std::make_unique<TxnState>();
  s->repo = impl_;
  std::lock_guard lock(impl_->mu);
  const auto& meta = impl_->table_locked(table);
  s->table = table;
  s->schema = meta.schema;
  s->key_indices = meta.schema.key_indices();
  s->has_pk = meta.schema.has_primary_key();
  s->read_ts = impl_->catalog.clock;
  impl_->runtime_locked(table).active.insert(s->read_ts);
  return Transaction(std::move(s));
}

std::vector<ScanEntry> Repository::scan_entries(const SnapshotRef& ref) const {
  detail::View view;
  {
    std::lock_guard lock(impl_->mu);
    view = impl_->view_locked(ref, true);
  }
  return detail::scan_view(impl_->store, view);
}

std::vector<Row> Repository::scan(const SnapshotRef& ref) const {
  std::vector<Row> out;
  for (auto& e : scan_entries(ref)) out.push_back(std::move(e.values));
  return out;
}

void Repository::flush(TableId table) {
  std::lock_guard lock(impl_->mu);
  impl_->flush_locked(table);
}

std::vector<ScanEntry> scan_version(const ObjectStore& store, const Manifest& m) {
  detail::View v;
  v.manifest = std::make_shared<const Manifest>(m);
  return detail::scan_view(store, v);
}

}  // namespace tablevc
