#include "tablevc/harness/history.hpp"

#include <algorithm>

#include "tablevc/codec.hpp"
#include "tablevc/maintenance.hpp"

namespace tablevc::harness {

namespace {

constexpr std::int64_t kKeySpace = 96;

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }
bool chance(std::mt19937_64& rng, double p) { return static_cast<double>(rng() % 10000) < p * 10000.0; }

std::string b_value(std::mt19937_64& rng, bool pk) {
  static const char* kB[] = {"x", "y", "z"};
  return kB[pick(rng, pk ? 3 : 2)];
}

Row random_row(std::mt19937_64& rng, bool pk, std::int64_t id) {
  if (pk) return {id, static_cast<std::int64_t>(pick(rng, 4)), b_value(rng, true)};
  return {static_cast<std::int64_t>(pick(rng, 3)), b_value(rng, false)};
}

std::int64_t id_of(const Row& r) { return std::get<std::int64_t>(r[0]); }

bool has_id(const Multiset& m, std::int64_t id) {
  return std::any_of(m.begin(), m.end(), [&](const Row& r) { return id_of(r) == id; });
}

std::optional<std::int64_t> free_id(std::mt19937_64& rng, const Multiset& m) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    auto id = static_cast<std::int64_t>(pick(rng, kKeySpace));
    if (!has_id(m, id)) return id;
  }
  return std::nullopt;
}

void remove_one(Multiset& m, const Row& r) {
  auto it = std::find_if(m.begin(), m.end(), [&](const Row& x) { return rows_equal(x, r); });
  if (it != m.end()) m.erase(it);
}

void op_insert(Transaction& txn, std::mt19937_64& rng, Multiset& m, const HistoryOptions& o) {
  auto n = 1 + pick(rng, 3);
  std::vector<Row> rows;
  for (std::uint64_t i = 0; i < n && m.size() < o.max_rows; ++i) {
    if (o.primary_key) {
      auto id = free_id(rng, m);
      if (!id) break;
      rows.push_back(random_row(rng, true, *id));
    } else {
      rows.push_back(random_row(rng, false, 0));
    }
    m.push_back(rows.back());
  }
  if (!rows.empty()) txn.insert(rows);
}

void op_delete_keys(Transaction& txn, std::mt19937_64& rng, Multiset& m, const HistoryOptions& o) {
  if (o.primary_key) {
    std::vector<std::vector<Value>> keys;
    auto n = 1 + pick(rng, 2);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::int64_t id = !m.empty() && pick(rng, 4) != 0 ? id_of(m[pick(rng, m.size())])
                                                         : static_cast<std::int64_t>(pick(rng, kKeySpace));
      keys.push_back({id});
    }
    txn.delete_keys(keys);
    for (const auto& k : keys) {
      auto id = std::get<std::int64_t>(k[0]);
      std::erase_if(m, [&](const Row& r) { return id_of(r) == id; });
    }
    return;
  }
  auto entries = txn.scan();
  if (entries.empty()) return;
  const auto& e = entries[pick(rng, entries.size())];
  std::vector<std::vector<Value>> keys{decode_key(e.key)};
  txn.delete_keys(keys);
  remove_one(m, e.values);
}

void op_delete_where(Transaction& txn, std::mt19937_64& rng, Multiset& m, const HistoryOptions& o) {
  std::size_t col = o.primary_key ? 1 : 0;
  Value v = static_cast<std::int64_t>(pick(rng, o.primary_key ? 4 : 3));
  txn.delete_where({{"a", v}});
  std::erase_if(m, [&](const Row& r) { return compare_values(r[col], v) == 0; });
}

void op_update_keys(Transaction& txn, std::mt19937_64& rng, Multiset& m, const HistoryOptions& o) {
  Value b = b_value(rng, o.primary_key);
  std::size_t col = o.primary_key ? 2 : 1;
  if (o.primary_key) {
    if (m.empty()) return;
    auto id = id_of(m[pick(rng, m.size())]);
    std::vector<std::vector<Value>> keys{{id}};
    txn.update_keys(keys, {{"b", b}});
    for (auto& r : m) {
      if (id_of(r) == id) r[col] = b;
    }
    return;
  }
  auto entries = txn.scan();
  if (entries.empty()) return;
  const auto& e = entries[pick(rng, entries.size())];
  std::vector<std::vector<Value>> keys{decode_key(e.key)};
  txn.update_keys(keys, {{"b", b}});
  remove_one(m, e.values);
  auto updated = e.values;
  updated[col] = b;
  m.push_back(std::move(updated));
}

void op_update_where(Transaction& txn, std::mt19937_64& rng, Multiset& m, const HistoryOptions& o) {
  Value a = static_cast<std::int64_t>(pick(rng, o.primary_key ? 4 : 3));
  Value b = b_value(rng, o.primary_key);
  std::size_t a_col = o.primary_key ? 1 : 0;
  txn.update_where({{"a", a}}, {{"b", b}});
  for (auto& r : m) {
    if (compare_values(r[a_col], a) == 0) r[a_col + 1] = b;
  }
}

void op_transient(Transaction& txn, std::mt19937_64& rng, const Multiset& m, const HistoryOptions& o) {
  if (o.primary_key) {
    auto id = free_id(rng, m);
    if (!id) return;
    std::vector<Row> rows{random_row(rng, true, *id)};
    txn.insert(rows);
    std::vector<std::vector<Value>> keys{{*id}};
    txn.delete_keys(keys);
    return;
  }
  std::vector<Row> rows{random_row(rng, false, 0)};
  txn.insert(rows);
  const ScanEntry* newest = nullptr;
  auto entries = txn.scan();
  for (const auto& e : entries) {
    if (rows_equal(e.values, rows[0]) && (newest == nullptr || e.key > newest->key)) newest = &e;
  }
  std::vector<std::vector<Value>> keys{decode_key(newest->key)};
  txn.delete_keys(keys);
}

}  // namespace

Schema history_schema(bool primary_key) {
  Schema s;
  if (primary_key) {
    s.columns = {{"id", ColumnType::Int64}, {"a", ColumnType::Int64}, {"b", ColumnType::String}};
    s.primary_key = {"id"};
  } else {
    s.columns = {{"a", ColumnType::Int64}, {"b", ColumnType::String}};
  }
  return s;
}

bool random_commit(Repository& repo, TableId table, std::mt19937_64& rng, Multiset& model,
                   const HistoryOptions& options) {
  auto txn = repo.begin(table);
  Multiset m = model;
  auto ops = 1 + pick(rng, 3);
  for (std::uint64_t i = 0; i < ops; ++i) {
    switch (pick(rng, 7)) {
      case 0:
      case 1: op_insert(txn, rng, m, options); break;
      case 2: op_delete_keys(txn, rng, m, options); break;
      case 3: op_delete_where(txn, rng, m, options); break;
      case 4: op_update_keys(txn, rng, m, options); break;
      case 5: op_update_where(txn, rng, m, options); break;
      default: op_transient(txn, rng, m, options); break;
    }
  }
  if (chance(rng, options.abort_prob)) {
    txn.abort();
    return false;
  }
  txn.commit();
  model = std::move(m);
  return true;
}

History build_history(Repository& repo, std::uint64_t seed, const HistoryOptions& options, const std::string& prefix) {
  std::mt19937_64 rng(seed);
  History h;
  auto schema = history_schema(options.primary_key);
  h.key_indices = schema.key_indices();
  h.target = repo.create_table(prefix + "_t", schema);

  auto maintain = [&](TableId t) {
    if (chance(rng, options.flush_prob)) repo.flush(t);
    if (chance(rng, options.compact_prob)) compact(repo, t);
  };

  Multiset model_t;
  for (std::size_t i = 0; i < options.base_txns; ++i) {
    random_commit(repo, h.target, rng, model_t, options);
    maintain(h.target);
  }
  h.base = repo.create_snapshot(h.target, "sn1");
  h.base_rows = model_t;
  h.source = repo.clone_table(h.base, prefix + "_c");
  Multiset model_c = model_t;

  for (std::size_t i = 0; i < options.branch_txns; ++i) {
    bool on_target = pick(rng, 2) == 0;
    auto table = on_target ? h.target : h.source;
    random_commit(repo, table, rng, on_target ? model_t : model_c, options);
    maintain(table);
  }
  h.target_snap = repo.create_snapshot(h.target, "sn2");
  h.source_snap = repo.create_snapshot(h.source, "sn3");
  h.target_rows = std::move(model_t);
  h.source_rows = std::move(model_c);
  return h;
}

}  // namespace tablevc::harness
