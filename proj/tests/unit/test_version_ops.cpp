#include <gtest/gtest.h>

#include "tablevc/error.hpp"
#include "tablevc/harness/oracle.hpp"
#include "tablevc/maintenance.hpp"
#include "tablevc/version_ops.hpp"
#include "test_util.hpp"

using namespace tablevc;
using tvtest::key1;
using tvtest::kv;

namespace {

struct Diff : ::testing::Test {
  tvtest::TempDir dir;
  Repository repo = Repository::init(dir / "repo", std::nullopt, tvtest::fast_options());

  std::vector<DiffRow> all_paths(const SnapshotRef& a, const SnapshotRef& b) {
    auto fast = snapshot_diff(repo, a, b, {std::nullopt, DiffPath::Auto});
    auto slow = snapshot_diff(repo, a, b, {std::nullopt, DiffPath::Fallback});
    auto oracle = harness::oracle_diff(repo.scan(a), repo.scan(b));
    EXPECT_EQ(harness::by_value(fast), oracle);
    EXPECT_EQ(harness::by_value(slow), oracle);
    return fast;
  }
};

}  // namespace

TEST_F(Diff, UpdateShowsAsMinusPlus) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a"), kv(2, "b"), kv(3, "c")});
  auto s1 = repo.create_snapshot(t, "s1");
  auto c = repo.clone_table(s1, "c");
  auto txn = repo.begin(c);
  txn.update_keys(tvtest::keys({2}), {{"v", Value{std::string("x")}}});
  txn.insert(std::vector<Row>{kv(4, "d")});
  txn.commit();
  auto d = all_paths(SnapshotRef::current(t), SnapshotRef::current(c));
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0], (DiffRow{-1, kv(2, "b")}));
  EXPECT_EQ(d[1], (DiffRow{1, kv(2, "x")}));
  EXPECT_EQ(d[2], (DiffRow{1, kv(4, "d")}));
}

TEST_F(Diff, IdenticalVersionsAreEmpty) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  auto s1 = repo.create_snapshot(t, "s1");
  auto c = repo.clone_table(s1, "c");
  EXPECT_TRUE(all_paths(SnapshotRef::current(t), SnapshotRef::current(c)).empty());
}

TEST_F(Diff, SameChangeOnBothSidesCancels) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a"), kv(2, "b")});
  auto c = repo.clone_table(repo.create_snapshot(t, "s1"), "c");
  for (auto table : {t, c}) {
    auto txn = repo.begin(table);
    txn.update_keys(tvtest::keys({1}), {{"v", Value{std::string("same")}}});
    txn.commit();
  }
  EXPECT_TRUE(all_paths(SnapshotRef::current(t), SnapshotRef::current(c)).empty());
}

TEST_F(Diff, TransientAndMovedRows) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a"), kv(2, "b")});
  tvtest::insert_rows(repo, t, {kv(3, "c")});
  auto c = repo.clone_table(repo.create_snapshot(t, "s1"), "c");
  tvtest::insert_rows(repo, c, {kv(9, "tmp")});
  {
    auto txn = repo.begin(c);
    txn.delete_keys(tvtest::keys({9}));
    txn.commit();
  }
  compact(repo, c);
  EXPECT_TRUE(all_paths(SnapshotRef::current(t), SnapshotRef::current(c)).empty());
  {
    auto txn = repo.begin(t);
    txn.delete_keys(tvtest::keys({3}));
    txn.commit();
  }
  auto d = all_paths(SnapshotRef::current(t), SnapshotRef::current(c));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (DiffRow{1, kv(3, "c")}));
}

TEST_F(Diff, DuplicateRowsWithoutKey) {
  auto t = repo.create_table("t", tvtest::kv_schema(false));
  tvtest::insert_rows(repo, t, {kv(1, "r")});
  auto c = repo.clone_table(repo.create_snapshot(t, "s1"), "c");
  tvtest::insert_rows(repo, c, {kv(1, "r")});
  auto d = all_paths(SnapshotRef::current(t), SnapshotRef::current(c));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (DiffRow{1, kv(1, "r")}));
}

TEST_F(Diff, UnrelatedTablesUseFallback) {
  auto a = repo.create_table("a", tvtest::kv_schema());
  auto b = repo.create_table("b", tvtest::kv_schema());
  tvtest::insert_rows(repo, a, {kv(1, "a"), kv(2, "b")});
  tvtest::insert_rows(repo, b, {kv(2, "b"), kv(3, "c")});
  auto d = all_paths(SnapshotRef::current(a), SnapshotRef::current(b));
  EXPECT_EQ(d.size(), 2u);
  try {
    snapshot_diff(repo, SnapshotRef::current(a), SnapshotRef::current(b), {std::nullopt, DiffPath::Fast});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST_F(Diff, SchemaMismatchRejected) {
  auto a = repo.create_table("a", tvtest::kv_schema());
  auto b = repo.create_table("b", tvtest::kv_schema(false));
  try {
    snapshot_diff(repo, SnapshotRef::current(a), SnapshotRef::current(b));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}

TEST_F(Diff, DeltaReadsOnlyNewObjects) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  std::vector<Row> rows;
  for (int i = 0; i < 300; ++i) rows.push_back(kv(i, "v"));
  tvtest::insert_rows(repo, t, rows);
  auto s1 = repo.create_snapshot(t, "s1");
  auto base = repo.resolve(s1);
  auto txn = repo.begin(t);
  txn.update_keys(tvtest::keys({7}), {{"v", Value{std::string("w")}}});
  txn.commit();
  auto cur = repo.resolve(SnapshotRef::current(t));
  auto delta = compute_delta(*cur.manifest, *base.manifest);
  EXPECT_EQ(delta.added_data.size(), 1u);
  EXPECT_EQ(delta.added_tombstones.size(), 1u);
  EXPECT_TRUE(delta.removed_data.empty());
  auto scan = scan_delta(repo.store(), cur.schema, *cur.manifest, *base.manifest, delta);
  ASSERT_EQ(scan.rows.size(), 2u);
  EXPECT_EQ(scan.rows[0].sign, -1);
  EXPECT_FALSE(scan.rows[0].values_known);
  resolve_values(repo.store(), scan.rows);
  EXPECT_TRUE(rows_equal(scan.rows[0].values, kv(7, "v")));
  EXPECT_EQ(scan.rows[1].sign, 1);
}

TEST_F(Diff, AggregateNeedsMatchingBase) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  auto v1 = repo.resolve(SnapshotRef::current(t));
  tvtest::insert_rows(repo, t, {kv(2, "a")});
  auto v2 = repo.resolve(SnapshotRef::current(t));
  tvtest::insert_rows(repo, t, {kv(3, "a")});
  auto v3 = repo.resolve(SnapshotRef::current(t));
  auto a = scan_delta(repo.store(), v1.schema, *v2.manifest, *v1.manifest);
  auto b = scan_delta(repo.store(), v1.schema, *v3.manifest, *v2.manifest);
  try {
    diff_aggregate(v1.schema, a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BaseMismatch);
  }
}

TEST(RowFingerprint, WideRowsHashed) {
  Row small{Value{std::string("abc")}};
  Row wide{Value{std::string(500, 'x')}};
  Row wide2{Value{std::string(499, 'x') + "y"}};
  EXPECT_LT(row_fingerprint(wide).size(), 80u);
  EXPECT_NE(row_fingerprint(wide), row_fingerprint(wide2));
  EXPECT_NE(row_fingerprint(small), row_fingerprint(wide));

  RowCounter counter;
  counter[wide] += 1;
  counter[wide2] -= 2;
  counter[wide] += 1;
  auto out = counter.take();
  ASSERT_EQ(out.size(), 2u);
}
