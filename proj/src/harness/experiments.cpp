#include "tablevc/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"
#include "tablevc/harness/lineitem.hpp"
#include "tablevc/harness/oracle.hpp"
#include "tablevc/merge_engine.hpp"
#include "tablevc/version_ops.hpp"

namespace tablevc::harness {

namespace {

using json = nlohmann::ordered_json;

template <typename F>
double timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr std::size_t kComment = 7;

// A loaded table plus the key tuple addressing each generated row.
struct Loaded {
  TableId table{};
  std::vector<Row> rows;
  std::vector<std::vector<Value>> keys;
};

Loaded load(Repository& repo, const std::string& name, const ExperimentOptions& o) {
  Loaded l;
  auto schema = lineitem_schema(o.primary_key);
  l.table = repo.create_table(name, schema);
  l.rows = gen_lineitem(o.base_rows, o.seed);
  {
    auto txn = repo.begin(l.table);
    txn.insert(l.rows);
    txn.commit();
  }
  repo.flush(l.table);
  l.keys.reserve(l.rows.size());
  if (o.primary_key) {
    for (const auto& r : l.rows) l.keys.push_back({r[0], r[1]});
  } else {
    // One insert batch receives ascending uniquifiers in row order.
    for (const auto& e : repo.scan_entries(SnapshotRef::current(l.table))) l.keys.push_back(decode_key(e.key));
    if (l.keys.size() != l.rows.size()) fail(ErrorCode::Internal, "row count mismatch after load");
  }
  return l;
}

// Contents of one branch as base rows (absent when deleted) plus inserts.
struct Branch {
  std::vector<std::optional<Row>> base;
  std::vector<Row> added;

  Multiset rows() const {
    Multiset out;
    out.reserve(base.size() + added.size());
    for (const auto& r : base) {
      if (r) out.push_back(*r);
    }
    out.insert(out.end(), added.begin(), added.end());
    return out;
  }
};

struct ChangeSet {
  std::vector<std::size_t> updates;
  std::vector<std::size_t> deletes;
  std::size_t inserts = 0;
  std::string tag;
  std::int64_t insert_order_base = 0;
};

void apply(Repository& repo, TableId table, const Loaded& l, const ChangeSet& c, Branch& model) {
  auto txn = repo.begin(table);
  std::vector<std::vector<Value>> keys;
  for (auto i : c.updates) keys.push_back(l.keys[i]);
  Value comment = c.tag;
  if (!keys.empty()) txn.update_keys(keys, {{"l_comment", comment}});
  for (auto i : c.updates) {
    if (model.base[i]) (*model.base[i])[kComment] = comment;
  }
  keys.clear();
  for (auto i : c.deletes) keys.push_back(l.keys[i]);
  if (!keys.empty()) txn.delete_keys(keys);
  for (auto i : c.deletes) model.base[i].reset();
  std::vector<Row> fresh;
  for (std::size_t i = 0; i < c.inserts; ++i) {
    fresh.push_back({c.insert_order_base + static_cast<std::int64_t>(i), std::int64_t{1}, std::int64_t{7},
                     std::int64_t{1}, 1.5, 0.0, std::string("AIR"), c.tag});
  }
  if (!fresh.empty()) txn.insert(fresh);
  model.added.insert(model.added.end(), fresh.begin(), fresh.end());
  txn.commit();
  repo.flush(table);
}

std::vector<std::size_t> sample(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng() % (n - i)]);
  idx.resize(k);
  return idx;
}

Branch initial(const Loaded& l) {
  Branch b;
  b.base.assign(l.rows.begin(), l.rows.end());
  return b;
}

std::int64_t max_order(const Loaded& l) { return l.rows.empty() ? 0 : std::get<std::int64_t>(l.rows.back()[0]); }

json e1(const ExperimentOptions& o) {
  auto repo = Repository::init(o.workdir, std::nullopt, o.repo_options);
  auto l = load(repo, "lineitem", o);
  json out;
  out["experiment"] = "E1";
  out["base_rows"] = o.base_rows;

  auto before = repo.io_stats().total();
  auto copy = repo.create_table("lineitem_copy", lineitem_schema(o.primary_key));
  double insert_s = timed([&] {
    auto rows = repo.scan(SnapshotRef::current(l.table));
    auto txn = repo.begin(copy);
    txn.insert(rows);
    txn.commit();
    repo.flush(copy);
  });
  auto insert_bytes = repo.io_stats().total() - before;

  before = repo.io_stats().total();
  TableId clone{};
  double clone_s = timed([&] { clone = repo.clone_table(SnapshotRef::current(l.table), "lineitem_clone"); });
  auto clone_bytes = repo.io_stats().total() - before;

  out["insert_bytes"] = insert_bytes;
  out["insert_seconds"] = insert_s;
  out["clone_bytes"] = clone_bytes;
  out["clone_seconds"] = clone_s;
  out["byte_ratio"] = static_cast<double>(clone_bytes) / static_cast<double>(std::max<std::uint64_t>(insert_bytes, 1));
  out["time_ratio"] = clone_s / std::max(insert_s, 1e-9);
  if (o.verify) {
    out["clone_matches"] = same_multiset(repo.scan(SnapshotRef::current(clone)), l.rows);
  }
  return out;
}

json e2(const ExperimentOptions& o) {
  auto repo = Repository::init(o.workdir, std::nullopt, o.repo_options);
  auto l = load(repo, "lineitem", o);
  auto sn1 = repo.create_snapshot(l.table, "sn1");
  auto clone = repo.clone_table(sn1, "lineitem_clone");

  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  ChangeSet c;
  c.updates = sample(l.rows.size(), o.change_rows, rng);
  c.tag = "changed";
  Branch model = initial(l);
  apply(repo, clone, l, c, model);
  auto sn3 = repo.create_snapshot(clone, "sn3");
  auto target = SnapshotRef::current(l.table);

  json out;
  out["experiment"] = "E2";
  out["base_rows"] = o.base_rows;
  out["change_rows"] = c.updates.size();
  out["primary_key"] = o.primary_key;

  std::vector<DiffRow> builtin;
  repo.store().drop_caches();
  double diff_s = timed([&] { builtin = snapshot_diff(repo, target, sn3); });
  std::vector<DiffRow> oracle;
  repo.store().drop_caches();
  double oracle_diff_s = timed([&] {
    auto a = repo.scan(target);
    auto b = repo.scan(sn3);
    oracle = oracle_diff(a, b);
  });
  out["builtin_diff_seconds"] = diff_s;
  out["oracle_diff_seconds"] = oracle_diff_s;
  out["diff_rows"] = builtin.size();
  if (o.verify) out["diff_matches"] = by_value(builtin) == by_value(oracle);

  auto key_idx = lineitem_schema(o.primary_key).key_indices();
  OracleMerge expected;
  repo.store().drop_caches();
  double oracle_merge_s = timed([&] {
    auto base = repo.scan(sn1);
    auto t = repo.scan(target);
    auto s = repo.scan(sn3);
    expected = oracle_merge(base, t, s, key_idx, MergeMode::Fail);
  });
  MergeReport report;
  repo.store().drop_caches();
  double merge_s = timed([&] { report = merge(repo, l.table, sn3, {MergeMode::Fail, std::nullopt, true}); });
  out["builtin_merge_seconds"] = merge_s;
  out["oracle_merge_seconds"] = oracle_merge_s;
  out["merge_applied_inserts"] = report.applied_inserts;
  out["merge_applied_deletes"] = report.applied_deletes;
  out["merge_true_conflicts"] = report.true_conflicts;
  if (o.verify) {
    out["merge_matches"] = expected.rows && same_multiset(repo.scan(target), *expected.rows);
  }
  return out;
}

json collaborative(const ExperimentOptions& o, bool overlap) {
  auto repo = Repository::init(o.workdir, std::nullopt, o.repo_options);
  auto l = load(repo, "lineitem", o);
  auto sn0 = repo.create_snapshot(l.table, "sn0");
  auto key_idx = lineitem_schema(o.primary_key).key_indices();
  std::mt19937_64 rng(o.seed ^ 0x5851f42d4c957f2dULL);

  constexpr int kBranches = 4;
  auto per = o.change_rows;
  auto pool = sample(l.rows.size(), per * kBranches, rng);
  auto shared = overlap ? static_cast<std::size_t>(static_cast<double>(per) * o.overlap_pct) : 0;

  json out;
  out["experiment"] = overlap ? "E4" : "E3";
  out["base_rows"] = o.base_rows;
  out["change_rows_per_branch"] = per;
  out["overlap_pct"] = overlap ? o.overlap_pct : 0.0;
  out["merges"] = json::array();

  Multiset base_rows = l.rows;
  Multiset expected = l.rows;
  bool aborted = false;
  auto mode = overlap ? MergeMode::Accept : MergeMode::Fail;
  std::vector<std::size_t> previous;
  for (int b = 0; b < kBranches; ++b) {
    std::vector<std::size_t> keys(pool.begin() + static_cast<std::ptrdiff_t>(b * per),
                                  pool.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
    for (std::size_t i = 0; i < shared && i < previous.size() && i < keys.size(); ++i) keys[i] = previous[i];
    previous = keys;

    ChangeSet c;
    auto n_delete = keys.size() / 10;
    c.deletes.assign(keys.end() - static_cast<std::ptrdiff_t>(n_delete), keys.end());
    c.updates.assign(keys.begin(), keys.end() - static_cast<std::ptrdiff_t>(n_delete));
    c.inserts = per / 10;
    c.tag = "branch" + std::to_string(b);
    c.insert_order_base = max_order(l) + 1 + static_cast<std::int64_t>(b) * static_cast<std::int64_t>(per + 1);

    auto name = "lineitem_b" + std::to_string(b);
    auto branch = repo.clone_table(sn0, name);
    Branch model = initial(l);
    apply(repo, branch, l, c, model);
    auto snap = repo.create_snapshot(branch, "done");

    json m;
    m["branch"] = name;
    MergeReport report;
    double s = 0;
    try {
      s = timed([&] { report = merge(repo, l.table, snap, {mode, std::nullopt, true}); });
    } catch (const MergeConflictError& e) {
      report = e.report();
      aborted = true;
    }
    m["seconds"] = s;
    m["true_conflicts"] = report.true_conflicts;
    m["false_conflicts"] = report.false_conflicts;
    m["applied_inserts"] = report.applied_inserts;
    m["applied_deletes"] = report.applied_deletes;
    m["committed"] = report.committed_ts.has_value();
    if (o.verify) {
      auto next = oracle_merge(base_rows, expected, model.rows(), key_idx, mode);
      m["oracle_true_conflicts"] = next.true_conflicts;
      if (next.rows) expected = std::move(*next.rows);
    }
    out["merges"].push_back(std::move(m));
  }
  out["aborted"] = aborted;
  if (o.verify) out["final_matches"] = same_multiset(repo.scan(SnapshotRef::current(l.table)), expected);
  return out;
}

}  // namespace

std::size_t change_set_rows(std::string_view name) {
  if (name == "C1") return 100;
  if (name == "C2") return 1000;
  if (name == "C3") return 10000;
  if (name == "C4") return 100000;
  fail(ErrorCode::InvalidArgument, "unknown change set '" + std::string(name) + "'");
}

nlohmann::ordered_json run_experiment(const ExperimentOptions& options) {
  if (options.workdir.empty()) fail(ErrorCode::InvalidArgument, "experiment needs a work directory");
  if (options.name == "E1") return e1(options);
  if (options.name == "E2") return e2(options);
  if (options.name == "E3") return collaborative(options, false);
  if (options.name == "E4") return collaborative(options, true);
  fail(ErrorCode::InvalidArgument, "unknown experiment '" + options.name + "'");
}

}  // namespace tablevc::harness
