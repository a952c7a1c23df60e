#include <gtest/gtest.h>

#include "tablevc/harness/history.hpp"
#include "tablevc/harness/oracle.hpp"
#include "tablevc/merge_engine.hpp"
#include "test_util.hpp"

using namespace tablevc;
using namespace tablevc::harness;

namespace {

class RandomHistories : public ::testing::TestWithParam<bool> {};

// Merges C@sn3 into T (lineage base) under FAIL and into clones of T@sn2
// (explicit base) under SKIP and ACCEPT; every outcome must equal the oracle.
TEST_P(RandomHistories, MergeMatchesOracle) {
  bool pk = GetParam();
  tvtest::TempDir dir;
  auto repo = Repository::init(dir / "repo", std::nullopt, tvtest::fast_options(16));
  std::size_t conflicted = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    HistoryOptions opts;
    opts.primary_key = pk;
    auto prefix = "h" + std::to_string(seed);
    auto h = build_history(repo, seed * 31 + (pk ? 0 : 1), opts, prefix);
    for (auto mode : {MergeMode::Fail, MergeMode::Skip, MergeMode::Accept}) {
      auto want = oracle_merge(h.base_rows, h.target_rows, h.source_rows, h.key_indices, mode);
      TableId target = h.target;
      MergeOptions mo{mode, std::nullopt, true};
      if (mode != MergeMode::Fail) {
        target = repo.clone_table(h.target_snap, prefix + "_" + std::string(to_string(mode)));
        mo.base = h.base;
      }
      std::optional<Multiset> got;
      std::size_t true_conflicts = 0;
      try {
        auto rep = merge(repo, target, h.source_snap, mo);
        true_conflicts = rep.true_conflicts;
        EXPECT_FALSE(rep.empty_base);
        got = repo.scan(SnapshotRef::current(target));
      } catch (const MergeConflictError& e) {
        true_conflicts = e.report().true_conflicts;
        ++conflicted;
      }
      ASSERT_EQ(got.has_value(), want.rows.has_value()) << "seed " << seed << " mode " << to_string(mode);
      if (got) EXPECT_TRUE(same_multiset(*got, *want.rows)) << "seed " << seed << " mode " << to_string(mode);
      EXPECT_EQ(true_conflicts, want.true_conflicts) << "seed " << seed << " mode " << to_string(mode);
    }
  }
  EXPECT_GT(conflicted, 0u);
}

INSTANTIATE_TEST_SUITE_P(KeyKinds, RandomHistories, ::testing::Values(true, false),
                         [](const auto& info) { return info.param ? "WithKey" : "WithoutKey"; });

}  // namespace
