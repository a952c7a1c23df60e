#include "tablevc/harness/oracle.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "tablevc/error.hpp"

namespace tablevc::harness {

void sort_rows(Multiset& rows) { std::sort(rows.begin(), rows.end(), RowLess{}); }

bool same_multiset(Multiset a, Multiset b) {
  if (a.size() != b.size()) return false;
  sort_rows(a);
  sort_rows(b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!rows_equal(a[i], b[i])) return false;
  }
  return true;
}

std::vector<DiffRow> oracle_diff(const Multiset& a, const Multiset& b) {
  std::map<Row, std::int64_t, RowLess> counts;
  std::optional<std::size_t> width;
  auto tally = [&](const Multiset& rows, std::int64_t sign) {
    for (const auto& r : rows) {
      if (width && *width != r.size()) fail(ErrorCode::SchemaMismatch, "rows of different width");
      width = r.size();
      counts[r] += sign;
    }
  };
  tally(a, -1);
  tally(b, +1);
  std::vector<DiffRow> out;
  for (const auto& [row, n] : counts) {
    if (n != 0) out.push_back({n, row});
  }
  return out;
}

std::vector<DiffRow> by_value(std::vector<DiffRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const DiffRow& x, const DiffRow& y) {
    auto c = compare_rows(x.values, y.values);
    if (c != 0) return c < 0;
    return x.diff_cnt < y.diff_cnt;
  });
  return rows;
}

namespace {

Row key_of(const Row& r, const std::vector<std::size_t>& idx) {
  Row k;
  for (auto i : idx) k.push_back(r[i]);
  return k;
}

bool same_opt(const std::optional<Row>& x, const std::optional<Row>& y) {
  if (x.has_value() != y.has_value()) return false;
  return !x || rows_equal(*x, *y);
}

OracleMerge merge_keyed(const Multiset& base, const Multiset& target, const Multiset& source,
                        const std::vector<std::size_t>& idx, MergeMode mode) {
  using Version = std::map<Row, Row, RowLess>;
  auto index = [&](const Multiset& rows) {
    Version v;
    for (const auto& r : rows) v.emplace(key_of(r, idx), r);
    return v;
  };
  auto vb = index(base), vt = index(target), vs = index(source);
  std::set<Row, RowLess> keys;
  for (const auto* v : {&vb, &vt, &vs}) {
    for (const auto& [k, r] : *v) keys.insert(k);
  }
  auto get = [](const Version& v, const Row& k) -> std::optional<Row> {
    auto it = v.find(k);
    if (it == v.end()) return std::nullopt;
    return it->second;
  };

  OracleMerge out;
  Multiset result;
  for (const auto& k : keys) {
    auto b = get(vb, k), t = get(vt, k), s = get(vs, k);
    std::optional<Row> keep;
    bool changed_t = !same_opt(t, b), changed_s = !same_opt(s, b);
    if (!changed_t && !changed_s) {
      keep = t;
    } else if (same_opt(t, s)) {
      keep = t;
      ++out.false_conflicts;
    } else if (!changed_t) {
      keep = s;
      ++out.false_conflicts;
    } else if (!changed_s) {
      keep = t;
      ++out.false_conflicts;
    } else {
      ++out.true_conflicts;
      keep = mode == MergeMode::Accept ? s : t;
    }
    if (keep) result.push_back(*keep);
  }
  if (mode == MergeMode::Fail && out.true_conflicts > 0) return out;
  out.rows = std::move(result);
  return out;
}

OracleMerge merge_unkeyed(const Multiset& base, const Multiset& target, const Multiset& source, MergeMode mode) {
  std::map<Row, std::array<std::int64_t, 3>, RowLess> counts;
  for (const auto& r : base) ++counts[r][0];
  for (const auto& r : target) ++counts[r][1];
  for (const auto& r : source) ++counts[r][2];

  OracleMerge out;
  Multiset result;
  for (const auto& [row, n] : counts) {
    auto dt = n[1] - n[0], ds = n[2] - n[0];
    std::int64_t keep = n[1];
    if (dt != 0 || ds != 0) {
      if (dt == 0) {
        keep = n[2];
        ++out.false_conflicts;
      } else if (ds == 0 || dt == ds) {
        ++out.false_conflicts;
      } else {
        ++out.true_conflicts;
        if (mode == MergeMode::Accept) keep = n[2];
      }
    }
    for (std::int64_t i = 0; i < keep; ++i) result.push_back(row);
  }
  if (mode == MergeMode::Fail && out.true_conflicts > 0) return out;
  out.rows = std::move(result);
  return out;
}

}  // namespace

OracleMerge oracle_merge(const Multiset& base, const Multiset& target, const Multiset& source,
                         const std::vector<std::size_t>& key_indices, MergeMode mode) {
  if (key_indices.empty()) return merge_unkeyed(base, target, source, mode);
  return merge_keyed(base, target, source, key_indices, mode);
}

}  // namespace tablevc::harness
