#include "tablevc/merge_engine.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

std::string_view to_string(MergeMode m) noexcept {
  switch (m) {
    case MergeMode::Fail: return "fail";
    case MergeMode::Skip: return "skip";
    case MergeMode::Accept: return "accept";
  }
  return "?";
}

std::string_view to_string(ConflictKind k) noexcept { return k == ConflictKind::True ? "true" : "false"; }

std::string_view to_string(Resolution r) noexcept {
  switch (r) {
    case Resolution::KeptTarget: return "kept_target";
    case Resolution::KeptSource: return "kept_source";
    case Resolution::Applied: return "applied";
    case Resolution::Aborted: return "aborted";
  }
  return "?";
}

std::optional<MergeMode> parse_merge_mode(std::string_view text) noexcept {
  if (text == "fail" || text == "FAIL") return MergeMode::Fail;
  if (text == "skip" || text == "SKIP") return MergeMode::Skip;
  if (text == "accept" || text == "ACCEPT") return MergeMode::Accept;
  return std::nullopt;
}

namespace {

bool same(const std::optional<Row>& x, const std::optional<Row>& y) {
  if (x.has_value() != y.has_value()) return false;
  return !x || rows_equal(*x, *y);
}

struct DeltaClass {
  ConflictKind kind = ConflictKind::False;
  int scenario = 0;
  std::int64_t adjust_skip = 0;  // change of the target multiplicity
  std::int64_t adjust_accept = 0;
};

DeltaClass classify_deltas(std::int64_t dt, std::int64_t ds) {
  if (dt == 0) return {ConflictKind::False, 1, ds, ds};
  if (ds == 0) return {ConflictKind::False, 2, 0, 0};
  if (dt == ds) return {ConflictKind::False, 3, 0, 0};
  return {ConflictKind::True, 3, 0, ds - dt};
}

struct Plan {
  std::vector<std::pair<std::string, RowId>> deletes;
  std::vector<Row> inserts;
};

Resolution true_resolution(MergeMode mode) {
  switch (mode) {
    case MergeMode::Skip: return Resolution::KeptTarget;
    case MergeMode::Accept: return Resolution::KeptSource;
    case MergeMode::Fail: break;
  }
  return Resolution::Aborted;
}

struct SideRows {
  const SignedRow* minus = nullptr;
  const SignedRow* plus = nullptr;
  bool empty() const { return minus == nullptr && plus == nullptr; }
};

SideRows side_rows(const std::vector<SignedRow>& live, const std::vector<SignedRow>& cancelled) {
  SideRows out;
  for (const auto* list : {&live, &cancelled}) {
    for (const auto& r : *list) (r.sign < 0 ? out.minus : out.plus) = &r;
  }
  return out;
}

void merge_pk(const ObjectStore& store, std::vector<AggregateGroup>& groups, MergeMode mode, bool shared_base,
              MergeReport& report, Plan& plan) {
  // Base rows are read only where both branches touched the key, or where a
  // shared-object base stands in for an empty one and every row matters.
  std::vector<SignedRow> unread;
  std::vector<SignedRow*> where;
  for (auto& g : groups) {
    bool a_side = !g.a.empty() || !g.cancelled_a.empty();
    bool b_side = !g.b.empty() || !g.cancelled_b.empty();
    if (!shared_base && (!a_side || !b_side)) continue;
    for (auto* list : {&g.a, &g.b, &g.cancelled_a, &g.cancelled_b}) {
      for (auto& r : *list) {
        if (r.values_known) continue;
        unread.push_back(r);
        where.push_back(&r);
      }
    }
  }
  resolve_values(store, unread);
  for (std::size_t i = 0; i < where.size(); ++i) *where[i] = std::move(unread[i]);

  for (const auto& g : groups) {
    auto t = side_rows(g.a, g.cancelled_a);
    auto s = side_rows(g.b, g.cancelled_b);
    const SignedRow* base = t.minus != nullptr ? t.minus : s.minus;

    ConflictRecord rec;
    rec.sort_key = g.key;
    auto parts = decode_key(g.key);
    rec.key_or_values.assign(parts.begin(), parts.end());
    if (base != nullptr) rec.base_row = base->values;
    rec.target_row = t.plus != nullptr ? std::optional<Row>(t.plus->values) : (t.minus ? std::nullopt : rec.base_row);
    rec.source_row = s.plus != nullptr ? std::optional<Row>(s.plus->values) : (s.minus ? std::nullopt : rec.base_row);

    rec.target_changed = !t.empty();
    rec.source_changed = !s.empty();
    bool take_source = false;
    if (shared_base) {
      auto c = classify_conflict_pk(std::nullopt, rec.target_row, rec.source_row);
      rec.kind = c.kind;
      rec.scenario = c.scenario;
      rec.base_row.reset();
      take_source = c.kind == ConflictKind::True ? mode == MergeMode::Accept : c.take_source;
    } else if (s.empty()) {
      rec.scenario = base != nullptr ? 5 : 1;
    } else if (t.empty()) {
      rec.scenario = base != nullptr ? 4 : 2;
      take_source = true;
    } else {
      auto c = classify_conflict_pk(rec.base_row, rec.target_row, rec.source_row);
      rec.kind = c.kind;
      rec.scenario = c.scenario;
      take_source = c.kind == ConflictKind::True ? mode == MergeMode::Accept : c.take_source;
    }
    if (rec.kind == ConflictKind::True) {
      rec.resolution = true_resolution(mode);
    } else {
      rec.resolution = take_source ? Resolution::Applied : Resolution::KeptTarget;
    }
    if (take_source && (t.empty() || !same(rec.target_row, rec.source_row))) {
      if (rec.target_row) {
        const SignedRow* victim = t.plus != nullptr ? t.plus : base;
        plan.deletes.emplace_back(victim->key, victim->rowid);
      }
      if (rec.source_row) plan.inserts.push_back(*rec.source_row);
    }
    report.conflicts.push_back(std::move(rec));
  }
}

struct ValueGroup {
  Row values;
  std::vector<const SignedRow*> tp, tm, sp, sm;
  bool survived = false;
};

void merge_nopk(const ObjectStore& store, std::vector<AggregateGroup>& groups, MergeMode mode,
                const Manifest* shared_base, MergeReport& report, Plan& plan) {
  std::vector<SignedRow> unread;
  std::vector<SignedRow*> where;
  for (auto& g : groups) {
    for (auto* list : {&g.a, &g.b, &g.cancelled_a, &g.cancelled_b}) {
      for (auto& r : *list) {
        if (r.values_known) continue;
        unread.push_back(r);
        where.push_back(&r);
      }
    }
  }
  resolve_values(store, unread);
  for (std::size_t i = 0; i < where.size(); ++i) *where[i] = std::move(unread[i]);

  std::map<std::string, ValueGroup> by_value;
  auto add = [&](const std::vector<SignedRow>& rows, bool target, bool live) {
    for (const auto& r : rows) {
      auto& vg = by_value[encode_key_values(r.values)];
      if (vg.values.empty()) vg.values = r.values;
      vg.survived = vg.survived || live;
      auto& list = target ? (r.sign > 0 ? vg.tp : vg.tm) : (r.sign > 0 ? vg.sp : vg.sm);
      list.push_back(&r);
    }
  };
  for (const auto& g : groups) {
    add(g.a, true, true);
    add(g.cancelled_a, true, false);
    add(g.b, false, true);
    add(g.cancelled_b, false, false);
  }

  auto delta = [](const std::vector<const SignedRow*>& plus, const std::vector<const SignedRow*>& minus) {
    return static_cast<std::int64_t>(plus.size()) - static_cast<std::int64_t>(minus.size());
  };
  // With no real base the rules need absolute counts; the shared objects are
  // counted only for values whose outcome depends on them.
  std::unordered_map<std::string, std::int64_t> shared_counts;
  if (shared_base != nullptr) {
    for (const auto& [enc, vg] : by_value) {
      auto dt = delta(vg.tp, vg.tm), ds = delta(vg.sp, vg.sm);
      if (vg.survived && dt != ds && (dt <= 0 || ds <= 0)) shared_counts[enc] = 0;
    }
    if (!shared_counts.empty()) {
      for (const auto& e : scan_version(store, *shared_base)) {
        if (auto it = shared_counts.find(encode_key_values(e.values)); it != shared_counts.end()) ++it->second;
      }
    }
  }

  for (auto& [enc, vg] : by_value) {
    if (!vg.survived) continue;
    auto dt = delta(vg.tp, vg.tm), ds = delta(vg.sp, vg.sm);
    if (shared_base != nullptr) {
      auto it = shared_counts.find(enc);
      std::int64_t common = it == shared_counts.end() ? 0 : it->second;
      dt += common;
      ds += common;
    }
    auto c = classify_deltas(dt, ds);

    ConflictRecord rec;
    rec.sort_key = enc;
    rec.key_or_values = vg.values;
    rec.kind = c.kind;
    rec.scenario = c.scenario;
    rec.delta_target = dt;
    rec.delta_source = ds;
    rec.target_changed = !vg.tp.empty() || !vg.tm.empty();
    rec.source_changed = !vg.sp.empty() || !vg.sm.empty();
    std::int64_t adjust = mode == MergeMode::Accept ? c.adjust_accept : c.adjust_skip;
    if (c.kind == ConflictKind::True) {
      rec.resolution = true_resolution(mode);
    } else {
      rec.resolution = adjust != 0 ? Resolution::Applied : Resolution::KeptTarget;
    }
    report.conflicts.push_back(std::move(rec));
    if (c.kind == ConflictKind::True && mode == MergeMode::Fail) continue;

    for (std::int64_t i = 0; i < adjust; ++i) plan.inserts.push_back(vg.values);
    if (adjust < 0) {
      // Rows of this value the target still shows and whose address is known.
      RowIdSet target_deleted;
      for (const auto* r : vg.tm) target_deleted.insert(r->rowid);
      std::vector<const SignedRow*> candidates(vg.tp.begin(), vg.tp.end());
      for (const auto* r : vg.sm) {
        if (target_deleted.count(r->rowid) == 0) candidates.push_back(r);
      }
      auto need = static_cast<std::size_t>(-adjust);
      if (candidates.size() < need) fail(ErrorCode::NegativeCount, "not enough rows to remove for a value group");
      std::sort(candidates.begin(), candidates.end(), [](const SignedRow* x, const SignedRow* y) {
        if (x->key != y->key) return x->key < y->key;
        return x->rowid < y->rowid;
      });
      for (std::size_t i = 0; i < need; ++i) plan.deletes.emplace_back(candidates[i]->key, candidates[i]->rowid);
    }
  }
}

}  // namespace

PkClassification classify_conflict_pk(const std::optional<Row>& base, const std::optional<Row>& target,
                                      const std::optional<Row>& source) {
  if (!base) {
    if (!source) return {ConflictKind::False, 1, false};
    if (!target) return {ConflictKind::False, 2, true};
    if (same(target, source)) return {ConflictKind::False, 3, false};
    return {ConflictKind::True, 3, false};
  }
  if (same(target, base)) return {ConflictKind::False, 4, true};
  if (same(source, base)) return {ConflictKind::False, 5, false};
  if (same(target, source)) return {ConflictKind::False, 6, false};
  return {ConflictKind::True, 6, false};
}

NoPkClassification classify_conflict_nopk(std::int64_t n_base, std::int64_t n_target, std::int64_t n_source) {
  if (n_base < 0 || n_target < 0 || n_source < 0) fail(ErrorCode::NegativeCount, "row multiplicity below zero");
  auto c = classify_deltas(n_target - n_base, n_source - n_base);
  return {c.kind, c.scenario, n_target + c.adjust_skip, n_target + c.adjust_accept};
}

MergeReport merge(Repository& repo, TableId target, const SnapshotRef& source, const MergeOptions& options) {
  auto src = repo.resolve(source);
  auto txn = repo.begin(target);
  auto tgt = repo.resolve(SnapshotRef::at(target, txn.read_ts()));
  if (!(src.schema == tgt.schema)) fail(ErrorCode::SchemaMismatch, "merge needs tables with identical schemas");

  MergeReport report;
  std::shared_ptr<const Manifest> base;
  if (options.base) {
    auto bv = repo.resolve(*options.base);
    if (!(bv.schema == tgt.schema)) fail(ErrorCode::SchemaMismatch, "base has a different schema");
    base = bv.manifest;
  } else if (options.use_lineage) {
    if (auto bv = repo.find_common_base(target, source)) base = bv->manifest;
  }
  if (!base) {
    // Empty common base; objects both versions share are skipped by diffing
    // against their intersection.
    base = std::make_shared<Manifest>(intersect_manifests(*tgt.manifest, *src.manifest));
    report.empty_base = true;
  }

  const auto& schema = tgt.schema;
  auto& store = repo.store();
  auto dt = scan_delta(store, schema, *tgt.manifest, *base);
  auto ds = scan_delta(store, schema, *src.manifest, *base);
  bool pk = schema.has_primary_key();
  auto groups = diff_aggregate(schema, dt, ds, !pk);

  Plan plan;
  if (pk) {
    merge_pk(store, groups, options.mode, report.empty_base, report, plan);
  } else {
    merge_nopk(store, groups, options.mode, report.empty_base ? base.get() : nullptr, report, plan);
  }
  std::sort(report.conflicts.begin(), report.conflicts.end(),
            [](const ConflictRecord& x, const ConflictRecord& y) { return x.sort_key < y.sort_key; });
  for (const auto& c : report.conflicts) ++(c.kind == ConflictKind::True ? report.true_conflicts : report.false_conflicts);

  if (options.mode == MergeMode::Fail && report.true_conflicts > 0) {
    txn.abort();
    throw MergeConflictError(std::move(report));
  }
  for (const auto& [key, rowid] : plan.deletes) txn.stage_delete_at(key, rowid);
  for (auto& row : plan.inserts) txn.stage_insert_unchecked(std::move(row));
  report.applied_deletes = plan.deletes.size();
  report.applied_inserts = plan.inserts.size();
  report.committed_ts = txn.commit();
  return report;
}

}  // namespace tablevc
