#pragma once

#include <optional>
#include <vector>

#include "tablevc/merge_engine.hpp"
#include "tablevc/value.hpp"
#include "tablevc/version_ops.hpp"

namespace tablevc::harness {

using Multiset = std::vector<Row>;

void sort_rows(Multiset& rows);
bool same_multiset(Multiset a, Multiset b);

// Brute-force diff: a-rows count -1, b-rows +1, grouped by every column;
// result ordered by row value.
std::vector<DiffRow> oracle_diff(const Multiset& a, const Multiset& b);

// Orders diff rows by value so results from different paths compare equal.
std::vector<DiffRow> by_value(std::vector<DiffRow> rows);

struct OracleMerge {
  std::optional<Multiset> rows;  // nullopt: the merge aborts
  std::size_t true_conflicts = 0;
  std::size_t false_conflicts = 0;
};

// Case analysis over whole versions. `key_indices` empty means the table has
// no primary key and rows are matched by value.
OracleMerge oracle_merge(const Multiset& base, const Multiset& target, const Multiset& source,
                         const std::vector<std::size_t>& key_indices, MergeMode mode);

}  // namespace tablevc::harness
