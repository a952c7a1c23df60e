#include "tablevc/version_ops.hpp"

#include <openssl/sha.h>

#include <algorithm>

#include "repo_impl.hpp"
#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

namespace {

constexpr std::size_t kWideValue = 64;

void window_refs(const std::vector<ObjectRef>& snap, const std::vector<ObjectRef>& base,
                 std::vector<ObjectWindow>& added, std::vector<ObjectWindow>& removed) {
  auto s = snap.begin();
  auto b = base.begin();
  while (s != snap.end() || b != base.end()) {
    if (b == base.end() || (s != snap.end() && s->id < b->id)) {
      added.push_back({s->id, 0, s->cap, s->stamp});
      ++s;
    } else if (s == snap.end() || b->id < s->id) {
      removed.push_back({b->id, 0, b->cap, b->stamp});
      ++b;
    } else {
      if (s->cap > b->cap) added.push_back({s->id, b->cap, s->cap, s->stamp});
      if (b->cap > s->cap) removed.push_back({b->id, s->cap, b->cap, b->stamp});
      ++s;
      ++b;
    }
  }
}

bool admitted(const ObjectRef* ref, CommitTs row_ts) { return ref != nullptr && ref->admits(row_ts); }

bool needs_row_ts(const ObjectRef* ref) { return ref != nullptr && ref->stamp == 0 && ref->cap != kMaxTs; }

Row pending_values(const Schema& schema, const std::vector<std::size_t>& key_idx, const std::string& key) {
  Row row(schema.columns.size());
  if (!key_idx.empty()) {
    auto parts = decode_key(key);
    for (std::size_t i = 0; i < key_idx.size() && i < parts.size(); ++i) row[key_idx[i]] = std::move(parts[i]);
  }
  return row;
}

bool signed_less(const SignedRow& x, const SignedRow& y) {
  if (x.key != y.key) return x.key < y.key;
  if (x.sign != y.sign) return x.sign < y.sign;
  return x.rowid < y.rowid;
}

std::string rowid_bytes(const RowId& r) {
  std::string out;
  ByteWriter w(out);
  w.u64(r.object.hi);
  w.u64(r.object.lo);
  w.u32(r.offset);
  return out;
}

// Moves identical changes of both sides into the cancelled lists.
void cancel_pairs(AggregateGroup& g) {
  std::vector<bool> a_used(g.a.size()), b_used(g.b.size());
  for (std::size_t i = 0; i < g.a.size(); ++i) {
    for (std::size_t j = 0; j < g.b.size(); ++j) {
      if (b_used[j] || g.a[i].sign != g.b[j].sign) continue;
      bool same = g.a[i].sign < 0 ? g.a[i].rowid == g.b[j].rowid : rows_equal(g.a[i].values, g.b[j].values);
      if (same) {
        a_used[i] = b_used[j] = true;
        break;
      }
    }
  }
  auto split = [](std::vector<SignedRow>& live, std::vector<SignedRow>& cancelled, const std::vector<bool>& used) {
    std::vector<SignedRow> keep;
    for (std::size_t i = 0; i < live.size(); ++i) (used[i] ? cancelled : keep).push_back(std::move(live[i]));
    live = std::move(keep);
  };
  split(g.a, g.cancelled_a, a_used);
  split(g.b, g.cancelled_b, b_used);
}

std::vector<DiffRow> collect_counts(const Schema& schema, RowCounter& counts) {
  std::vector<DiffRow> out;
  for (auto& [row, n] : counts.take()) {
    if (n != 0) out.push_back({n, std::move(row)});
  }
  sort_diff_rows(schema, out);
  return out;
}

}  // namespace

DeltaSet compute_delta(const Manifest& snap, const Manifest& base) {
  if (snap.schema_hash != base.schema_hash) fail(ErrorCode::SchemaMismatch, "versions have different schemas");
  DeltaSet d;
  window_refs(snap.data, base.data, d.added_data, d.removed_data);
  window_refs(snap.tombstones, base.tombstones, d.added_tombstones, d.removed_tombstones);
  return d;
}

DeltaScan scan_delta(const ObjectStore& store, const Schema& schema, const Manifest& snap, const Manifest& base,
                     const DeltaSet& delta) {
  auto key_idx = schema.key_indices();
  auto dead_snap = store.dead_rows(snap.tombstones);
  auto dead_base = store.dead_rows(base.tombstones);
  std::unordered_map<RowId, SignedRow, RowIdHash> plus;
  std::unordered_map<RowId, SignedRow, RowIdHash> minus;

  auto scan_windows = [&](const std::vector<ObjectWindow>& windows, const RowIdSet& dead, int sign, auto& out) {
    for (const auto& w : windows) {
      auto rows = detail::data_reader(store, w.id)->all_rows();
      for (std::uint32_t i = 0; i < rows.size(); ++i) {
        if (!w.contains(rows[i].ts)) continue;
        RowId rid{w.id, i};
        if (dead.count(rid) != 0) continue;
        out.emplace(rid, SignedRow{sign, std::move(rows[i].key), std::move(rows[i].values), true, rid});
      }
    }
  };
  // Rows only the snapshot holds, and rows only the base holds.
  scan_windows(delta.added_data, *dead_snap, +1, plus);
  scan_windows(delta.removed_data, *dead_base, -1, minus);

  struct Candidate {
    int sign;
    std::string key;
    RowId target;
  };
  std::vector<Candidate> to_read;

  // Base rows deleted by tombstones the base does not have.
  for (const auto& w : delta.added_tombstones) {
    for (const auto& e : *store.tombstones(w.id)) {
      if (!w.contains(e.ts) || dead_base->count(e.target) != 0 || minus.count(e.target) != 0) continue;
      const auto* ref = base.find_data(e.target.object);
      if (ref == nullptr) continue;
      if (needs_row_ts(ref)) {
        to_read.push_back({-1, e.key, e.target});
      } else if (ref->admits(0)) {
        minus.emplace(e.target, SignedRow{-1, e.key, pending_values(schema, key_idx, e.key), false, e.target});
      }
    }
  }
  // Rows the base deleted that the snapshot still shows.
  for (const auto& w : delta.removed_tombstones) {
    for (const auto& e : *store.tombstones(w.id)) {
      if (!w.contains(e.ts) || dead_snap->count(e.target) != 0 || plus.count(e.target) != 0) continue;
      if (snap.find_data(e.target.object) == nullptr) continue;
      to_read.push_back({+1, e.key, e.target});
    }
  }
  if (!to_read.empty()) {
    std::vector<RowId> ids;
    ids.reserve(to_read.size());
    for (const auto& c : to_read) ids.push_back(c.target);
    auto rows = store.read_rows(ids);
    for (std::size_t i = 0; i < to_read.size(); ++i) {
      const auto& c = to_read[i];
      const auto& m = c.sign > 0 ? snap : base;
      if (!admitted(m.find_data(c.target.object), rows[i].ts)) continue;
      auto& out = c.sign > 0 ? plus : minus;
      out.emplace(c.target, SignedRow{c.sign, std::move(rows[i].key), std::move(rows[i].values), true, c.target});
    }
  }

  DeltaScan result;
  result.base_digest = manifest_digest(base);
  result.rows.reserve(plus.size() + minus.size());
  for (auto& [rid, r] : minus) result.rows.push_back(std::move(r));
  for (auto& [rid, r] : plus) result.rows.push_back(std::move(r));
  std::sort(result.rows.begin(), result.rows.end(), signed_less);
  return result;
}

DeltaScan scan_delta(const ObjectStore& store, const Schema& schema, const Manifest& snap, const Manifest& base) {
  return scan_delta(store, schema, snap, base, compute_delta(snap, base));
}

void resolve_values(const ObjectStore& store, std::vector<SignedRow>& rows) {
  std::vector<RowId> ids;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].values_known) {
      ids.push_back(rows[i].rowid);
      where.push_back(i);
    }
  }
  if (ids.empty()) return;
  auto found = store.read_rows(ids);
  for (std::size_t j = 0; j < where.size(); ++j) {
    rows[where[j]].values = std::move(found[j].values);
    rows[where[j]].values_known = true;
  }
}

std::vector<AggregateGroup> diff_aggregate(const Schema& schema, const DeltaScan& a, const DeltaScan& b,
                                           bool keep_cancelled) {
  if (a.base_digest != b.base_digest) fail(ErrorCode::BaseMismatch, "deltas were computed against different bases");
  bool pk = schema.has_primary_key();
  auto group_key = [pk](const SignedRow& r) {
    if (pk) return r.key;
    if (r.sign < 0) return std::string(1, '\0') + rowid_bytes(r.rowid);
    return std::string(1, '\1') + row_fingerprint(r.values);
  };
  std::unordered_map<std::string, AggregateGroup> groups;
  for (const auto& r : a.rows) {
    auto k = group_key(r);
    auto& g = groups[k];
    g.key = k;
    g.a.push_back(r);
  }
  for (const auto& r : b.rows) {
    auto k = group_key(r);
    auto& g = groups[k];
    g.key = k;
    g.b.push_back(r);
  }
  std::vector<AggregateGroup> out;
  out.reserve(groups.size());
  for (auto& [k, g] : groups) {
    if (!g.a.empty() && !g.b.empty()) cancel_pairs(g);
    if (keep_cancelled || !g.a.empty() || !g.b.empty()) out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const AggregateGroup& x, const AggregateGroup& y) { return x.key < y.key; });
  return out;
}

std::string row_fingerprint(const Row& row) {
  std::string out;
  for (const auto& v : row) {
    auto enc = encode_key_values(std::span<const Value>(&v, 1));
    if (enc.size() <= kWideValue) {
      out += enc;
      continue;
    }
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(enc.data()), enc.size(), md);
    out.push_back('\xfe');
    out.append(reinterpret_cast<const char*>(md), sizeof md);
  }
  return out;
}

std::int64_t& RowCounter::operator[](const Row& row) {
  auto& bucket = map_[row_fingerprint(row)];
  for (auto& [r, n] : bucket) {
    if (rows_equal(r, row)) return n;
  }
  ++size_;
  return bucket.emplace_back(row, 0).second;
}

std::vector<std::pair<Row, std::int64_t>> RowCounter::take() {
  std::vector<std::pair<Row, std::int64_t>> out;
  out.reserve(size_);
  for (auto& [fp, bucket] : map_) {
    for (auto& entry : bucket) out.push_back(std::move(entry));
  }
  map_.clear();
  size_ = 0;
  return out;
}

void sort_diff_rows(const Schema& schema, std::vector<DiffRow>& rows) {
  if (schema.has_primary_key()) {
    auto idx = schema.key_indices();
    std::vector<std::pair<std::string, DiffRow>> keyed;
    keyed.reserve(rows.size());
    for (auto& r : rows) keyed.emplace_back(encode_key(r.values, idx), std::move(r));
    std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first < y.first;
      return compare_rows(x.second.values, y.second.values) < 0;
    });
    rows.clear();
    for (auto& [k, r] : keyed) rows.push_back(std::move(r));
  } else {
    std::sort(rows.begin(), rows.end(), [](const DiffRow& x, const DiffRow& y) {
      auto c = compare_rows(x.values, y.values);
      if (c != 0) return c < 0;
      return x.diff_cnt < y.diff_cnt;
    });
  }
}

std::vector<DiffRow> diff_fast(const ObjectStore& store, const Schema& schema, const Manifest& a, const Manifest& b,
                               const Manifest& base) {
  auto da = scan_delta(store, schema, a, base);
  auto db = scan_delta(store, schema, b, base);
  auto groups = diff_aggregate(schema, da, db);
  std::vector<SignedRow> signed_rows;
  for (auto& g : groups) {
    for (auto& r : g.a) {
      r.sign = -r.sign;
      signed_rows.push_back(std::move(r));
    }
    for (auto& r : g.b) signed_rows.push_back(std::move(r));
  }
  resolve_values(store, signed_rows);
  RowCounter counts;
  for (const auto& r : signed_rows) counts[r.values] += r.sign;
  return collect_counts(schema, counts);
}

std::vector<DiffRow> diff_fallback(const ObjectStore& store, const Schema& schema, const Manifest& a,
                                   const Manifest& b) {
  // Rows visible in exactly one of the two versions; objects both share are
  // only consulted through their tombstones.
  auto only = scan_delta(store, schema, b, a);
  resolve_values(store, only.rows);
  RowCounter counts;
  for (const auto& r : only.rows) counts[r.values] += r.sign;
  return collect_counts(schema, counts);
}

std::vector<DiffRow> snapshot_diff(Repository& repo, const SnapshotRef& a, const SnapshotRef& b,
                                   const DiffOptions& options) {
  auto va = repo.resolve(a);
  auto vb = repo.resolve(b);
  if (!(va.schema == vb.schema)) fail(ErrorCode::SchemaMismatch, "diff needs tables with identical schemas");
  std::optional<Version> base;
  if (options.path != DiffPath::Fallback) {
    if (options.base) {
      base = repo.resolve(*options.base);
      if (!(base->schema == va.schema)) fail(ErrorCode::SchemaMismatch, "base has a different schema");
    } else {
      base = repo.find_common_base(a.table, b);
    }
  }
  if (options.path == DiffPath::Fast && !base) fail(ErrorCode::InvalidArgument, "no common base for the fast path");
  if (base) return diff_fast(repo.store(), va.schema, *va.manifest, *vb.manifest, *base->manifest);
  return diff_fallback(repo.store(), va.schema, *va.manifest, *vb.manifest);
}

}  // namespace tablevc
