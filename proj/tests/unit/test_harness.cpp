#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "tablevc/codec.hpp"
#include "tablevc/harness/history.hpp"
#include "tablevc/harness/lineitem.hpp"
#include "tablevc/harness/oracle.hpp"
#include "test_util.hpp"

using namespace tablevc;
using namespace tablevc::harness;
using tvtest::kv;

TEST(OracleDiff, Counting) {
  EXPECT_TRUE(oracle_diff({kv(1, "a"), kv(2, "b")}, {kv(2, "b"), kv(1, "a")}).empty());
  auto d = oracle_diff({kv(1, "r")}, {kv(1, "r"), kv(1, "r")});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (DiffRow{1, kv(1, "r")}));
  auto e = oracle_diff({kv(1, "a"), kv(1, "a")}, {kv(2, "b")});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], (DiffRow{-2, kv(1, "a")}));
  EXPECT_EQ(e[1], (DiffRow{1, kv(2, "b")}));
}

TEST(OracleMerge, DisjointEditsSameInAllModes) {
  Multiset base{kv(1, "a"), kv(2, "b"), kv(3, "c")};
  Multiset target{kv(1, "A"), kv(2, "b"), kv(3, "c")};
  Multiset source{kv(1, "a"), kv(3, "c"), kv(4, "d")};
  Multiset want{kv(1, "A"), kv(3, "c"), kv(4, "d")};
  for (auto keys : {std::vector<std::size_t>{0}, std::vector<std::size_t>{}}) {
    for (auto mode : {MergeMode::Fail, MergeMode::Skip, MergeMode::Accept}) {
      auto m = oracle_merge(base, target, source, keys, mode);
      ASSERT_TRUE(m.rows.has_value());
      EXPECT_TRUE(same_multiset(*m.rows, want));
      EXPECT_EQ(m.true_conflicts, 0u);
    }
  }
}

TEST(OracleMerge, NoKeyCounts) {
  auto copies = [](int n) { return Multiset(n, kv(7, "r")); };
  std::vector<std::size_t> none;
  auto a = oracle_merge(copies(3), copies(3), copies(1), none, MergeMode::Fail);
  ASSERT_TRUE(a.rows);
  EXPECT_EQ(a.rows->size(), 1u);
  auto b = oracle_merge(copies(2), copies(5), copies(2), none, MergeMode::Fail);
  ASSERT_TRUE(b.rows);
  EXPECT_EQ(b.rows->size(), 5u);
  EXPECT_FALSE(oracle_merge(copies(2), copies(0), copies(4), none, MergeMode::Fail).rows.has_value());
  EXPECT_EQ(oracle_merge(copies(2), copies(0), copies(4), none, MergeMode::Skip).rows->size(), 0u);
  EXPECT_EQ(oracle_merge(copies(2), copies(0), copies(4), none, MergeMode::Accept).rows->size(), 4u);
}

TEST(OracleMerge, KeyConflicts) {
  std::vector<std::size_t> key{0};
  Multiset base{kv(1, "a")};
  auto skip = oracle_merge(base, {kv(1, "t")}, {}, key, MergeMode::Skip);
  EXPECT_EQ(skip.true_conflicts, 1u);
  EXPECT_TRUE(same_multiset(*skip.rows, {kv(1, "t")}));
  auto acc = oracle_merge(base, {kv(1, "t")}, {}, key, MergeMode::Accept);
  EXPECT_TRUE(acc.rows->empty());
  auto ins = oracle_merge({}, {kv(2, "x")}, {kv(2, "y")}, key, MergeMode::Accept);
  EXPECT_EQ(ins.true_conflicts, 1u);
  EXPECT_TRUE(same_multiset(*ins.rows, {kv(2, "y")}));
}

TEST(Lineitem, DeterministicWithUniqueKeys) {
  auto a = gen_lineitem(1000, 7);
  auto b = gen_lineitem(1000, 7);
  auto c = gen_lineitem(1000, 8);
  ASSERT_EQ(a.size(), 1000u);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), rows_equal));
  EXPECT_FALSE(std::equal(a.begin(), a.end(), c.begin(), rows_equal));
  auto schema = lineitem_schema(true);
  auto keys = schema.key_indices();
  std::set<std::string> seen;
  std::string prev;
  for (const auto& r : a) {
    EXPECT_NO_THROW(schema.check_row(r));
    auto k = encode_key(r, keys);
    EXPECT_TRUE(seen.insert(k).second);
    EXPECT_LT(prev, k);
    prev = k;
  }
}

TEST(Lineitem, MillionRowsQuickly) {
  auto t0 = std::chrono::steady_clock::now();
  auto rows = gen_lineitem(1000000, 7);
  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(rows.size(), 1000000u);
  EXPECT_LT(secs, 60.0);
}

TEST(History, ModelMatchesEngine) {
  tvtest::TempDir dir;
  auto repo = Repository::init(dir / "repo", std::nullopt, tvtest::fast_options(16));
  for (bool pk : {true, false}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      HistoryOptions opts;
      opts.primary_key = pk;
      auto h = build_history(repo, seed, opts, (pk ? "p" : "n") + std::to_string(seed));
      EXPECT_TRUE(same_multiset(repo.scan(h.base), h.base_rows));
      EXPECT_TRUE(same_multiset(repo.scan(h.target_snap), h.target_rows));
      EXPECT_TRUE(same_multiset(repo.scan(h.source_snap), h.source_rows));
    }
  }
}
