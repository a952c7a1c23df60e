#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tablevc/harness/oracle.hpp"
#include "tablevc/repository.hpp"

namespace tablevc::harness {

struct HistoryOptions {
  bool primary_key = true;
  std::size_t max_rows = 64;
  std::size_t base_txns = 3;
  std::size_t branch_txns = 6;
  double compact_prob = 0.15;
  double flush_prob = 0.3;
  double abort_prob = 0.05;
};

// Table T, a snapshot sn1 of it, a clone C of T@sn1, independent changes on
// both, then snapshots T@sn2 and C@sn3. The row sets are kept by a model
// that never reads the engine's data path.
struct History {
  TableId target{};
  TableId source{};
  SnapshotRef base;
  SnapshotRef target_snap;
  SnapshotRef source_snap;
  Multiset base_rows;
  Multiset target_rows;
  Multiset source_rows;
  std::vector<std::size_t> key_indices;
};

// (id INT64 key, a INT64, b STRING), or (a INT64, b STRING) without a key.
Schema history_schema(bool primary_key);

// One random transaction (inserts, deletes, updates, transient rows); on
// commit `model` is updated to the new contents. Returns false if aborted.
bool random_commit(Repository& repo, TableId table, std::mt19937_64& rng, Multiset& model,
                   const HistoryOptions& options);

History build_history(Repository& repo, std::uint64_t seed, const HistoryOptions& options, const std::string& prefix);

}  // namespace tablevc::harness
