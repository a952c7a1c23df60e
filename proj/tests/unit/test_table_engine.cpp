#include <gtest/gtest.h>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"
#include "tablevc/harness/oracle.hpp"
#include "tablevc/maintenance.hpp"
#include "tablevc/repository.hpp"
#include "test_util.hpp"

using namespace tablevc;
using tvtest::key1;
using tvtest::kv;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::vector<std::string> values_v(const std::vector<Row>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(format_value(r[0]) + "=" + format_value(r[1]));
  return out;
}

struct Fixture : ::testing::Test {
  tvtest::TempDir dir;
  Repository repo = Repository::init(dir / "repo", std::nullopt, tvtest::fast_options());
};

}  // namespace

TEST_F(Fixture, InsertScanInKeyOrder) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(3, "c"), kv(1, "a"), kv(2, "b")});
  auto rows = repo.scan(SnapshotRef::current(t));
  EXPECT_EQ(values_v(rows), (std::vector<std::string>{"1=a", "2=b", "3=c"}));
}

TEST_F(Fixture, PrimaryKeyViolations) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  EXPECT_EQ(code_of([&] { tvtest::insert_rows(repo, t, {kv(1, "z")}); }), ErrorCode::PkViolation);
  EXPECT_EQ(code_of([&] { tvtest::insert_rows(repo, t, {kv(5, "x"), kv(5, "y")}); }), ErrorCode::PkViolation);
  auto txn = repo.begin(t);
  txn.insert(std::vector<Row>{kv(2, "b")});
  EXPECT_EQ(code_of([&] { txn.update_keys(tvtest::keys({2}), {{"k", Value{std::int64_t{1}}}}); }),
            ErrorCode::PkViolation);
  txn.abort();
  // delete then reinsert of the same key in one transaction is allowed
  auto txn2 = repo.begin(t);
  EXPECT_EQ(txn2.delete_keys(tvtest::keys({1})), 1u);
  txn2.insert(std::vector<Row>{kv(1, "again")});
  txn2.commit();
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::current(t))), (std::vector<std::string>{"1=again"}));
}

TEST_F(Fixture, UpdatesAndDeletes) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a"), kv(2, "b"), kv(3, "b"), kv(4, "d")});
  auto txn = repo.begin(t);
  EXPECT_EQ(txn.update_where({{"v", Value{std::string("b")}}}, {{"v", Value{std::string("B")}}}), 2u);
  EXPECT_EQ(txn.delete_keys(tvtest::keys({4, 99})), 1u);
  EXPECT_EQ(txn.update_keys(tvtest::keys({1}), {{"k", Value{std::int64_t{10}}}}), 1u);
  auto view = txn.scan();
  EXPECT_EQ(view.size(), 3u);
  txn.commit();
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::current(t))), (std::vector<std::string>{"2=B", "3=B", "10=a"}));
}

TEST_F(Fixture, TransientRowsLeaveNoTrace) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  auto before = repo.clock();
  auto txn = repo.begin(t);
  txn.insert(std::vector<Row>{kv(2, "tmp")});
  txn.delete_keys(tvtest::keys({2}));
  EXPECT_EQ(txn.commit(), before);
  EXPECT_EQ(repo.clock(), before);
  EXPECT_EQ(repo.scan(SnapshotRef::current(t)).size(), 1u);
}

TEST_F(Fixture, NoKeyTablesAddressRowsByUniquifier) {
  auto t = repo.create_table("t", tvtest::kv_schema(false));
  tvtest::insert_rows(repo, t, {kv(1, "x"), kv(1, "x"), kv(2, "y")});
  auto entries = repo.scan_entries(SnapshotRef::current(t));
  ASSERT_EQ(entries.size(), 3u);
  auto u = decode_key(entries[1].key);
  ASSERT_EQ(u.size(), 1u);
  auto txn = repo.begin(t);
  EXPECT_EQ(txn.delete_keys(tvtest::KeyList{{u[0]}}), 1u);
  txn.commit();
  auto rows = repo.scan(SnapshotRef::current(t));
  EXPECT_EQ(rows.size(), 2u);
  auto t2 = repo.begin(t);
  EXPECT_EQ(code_of([&] { t2.delete_keys(tvtest::KeyList{{Value{std::string("x")}}}); }),
            ErrorCode::InvalidArgument);
}

TEST_F(Fixture, SnapshotsAndTimeTravel) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  auto ts1 = [&] {
    auto txn = repo.begin(t);
    txn.insert(std::vector<Row>{kv(1, "a")});
    return txn.commit();
  }();
  repo.create_snapshot(t, "s1");
  auto ts2 = [&] {
    auto txn = repo.begin(t);
    txn.update_keys(tvtest::keys({1}), {{"v", Value{std::string("b")}}});
    txn.insert(std::vector<Row>{kv(2, "c")});
    return txn.commit();
  }();
  EXPECT_LT(ts1, ts2);
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::named(t, "s1"))), (std::vector<std::string>{"1=a"}));
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::at(t, ts1))), (std::vector<std::string>{"1=a"}));
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::at(t, ts2))), (std::vector<std::string>{"1=b", "2=c"}));
  EXPECT_TRUE(repo.scan(SnapshotRef::at(t, ts1 - 1)).empty());
  EXPECT_EQ(code_of([&] { repo.create_snapshot(t, "s1"); }), ErrorCode::DuplicateSnapshotName);
  EXPECT_EQ(code_of([&] { repo.scan(SnapshotRef::named(t, "nope")); }), ErrorCode::UnknownSnapshot);
  EXPECT_EQ(repo.list_snapshots(t).size(), 1u);
  repo.drop_snapshot(t, "s1");
  EXPECT_TRUE(repo.list_snapshots(t).empty());
  EXPECT_EQ(repo.spec(SnapshotRef::at(t, 4)).to_string(), "t@ts:4");
  EXPECT_EQ(repo.ref("t@ts:4").ts, 4u);
}

TEST_F(Fixture, RetentionHorizon) {
  tvtest::TempDir d2;
  auto r = Repository::init(d2 / "repo", 2, tvtest::fast_options());
  auto t = r.create_table("t", tvtest::kv_schema());
  for (int i = 0; i < 6; ++i) tvtest::insert_rows(r, t, {kv(i, "x")});
  EXPECT_EQ(code_of([&] { r.scan(SnapshotRef::at(t, 1)); }), ErrorCode::OutOfRetention);
  EXPECT_EQ(r.scan(SnapshotRef::at(t, r.clock() - 1)).size(), 5u);
}

TEST_F(Fixture, CloneSharesObjectsAndDiverges) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  std::vector<Row> rows;
  for (int i = 0; i < 500; ++i) rows.push_back(kv(i, "v"));
  tvtest::insert_rows(repo, t, rows);
  auto sn = repo.create_snapshot(t, "s");
  auto before = repo.store().bytes_written();
  auto c = repo.clone_table(sn, "c");
  EXPECT_EQ(repo.store().bytes_written(), before);
  auto vt = repo.resolve(SnapshotRef::current(t));
  auto vc = repo.resolve(SnapshotRef::current(c));
  EXPECT_EQ(vt.manifest->data, vc.manifest->data);

  auto txn = repo.begin(c);
  txn.delete_keys(tvtest::keys({0}));
  txn.commit();
  EXPECT_EQ(repo.scan(SnapshotRef::current(t)).size(), 500u);
  EXPECT_EQ(repo.scan(SnapshotRef::current(c)).size(), 499u);
  auto base = repo.find_common_base(t, SnapshotRef::current(c));
  ASSERT_TRUE(base.has_value());
  EXPECT_EQ(base->id, vt.id);
  EXPECT_EQ(code_of([&] { repo.clone_table(sn, "c"); }), ErrorCode::DuplicateName);
}

TEST_F(Fixture, RestoreResetsContents) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  auto sn = repo.create_snapshot(t, "s");
  tvtest::insert_rows(repo, t, {kv(2, "b")});
  repo.restore_table(t, sn);
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::current(t))), (std::vector<std::string>{"1=a"}));
  tvtest::insert_rows(repo, t, {kv(2, "z")});
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::current(t))), (std::vector<std::string>{"1=a", "2=z"}));
  auto other = repo.create_table("o", tvtest::kv_schema(false));
  EXPECT_EQ(code_of([&] { repo.restore_table(other, sn); }), ErrorCode::SchemaMismatch);
}

TEST_F(Fixture, ConcurrentWritersFirstCommitterWins) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a"), kv(2, "b")});
  auto a = repo.begin(t);
  auto b = repo.begin(t);
  a.update_keys(tvtest::keys({1}), {{"v", Value{std::string("A")}}});
  b.update_keys(tvtest::keys({1}), {{"v", Value{std::string("B")}}});
  a.commit();
  EXPECT_EQ(code_of([&] { b.commit(); }), ErrorCode::WriteConflict);

  auto c = repo.begin(t);
  auto d = repo.begin(t);
  c.update_keys(tvtest::keys({1}), {{"v", Value{std::string("C")}}});
  d.update_keys(tvtest::keys({2}), {{"v", Value{std::string("D")}}});
  c.commit();
  d.commit();
  EXPECT_EQ(values_v(repo.scan(SnapshotRef::current(t))), (std::vector<std::string>{"1=C", "2=D"}));
}

TEST_F(Fixture, RewriteDuringTransactionConflicts) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  repo.flush(t);
  tvtest::insert_rows(repo, t, {kv(2, "b")});
  repo.flush(t);
  auto txn = repo.begin(t);
  txn.insert(std::vector<Row>{kv(3, "c")});
  auto rep = compact(repo, t);
  EXPECT_TRUE(rep.changed);
  EXPECT_EQ(code_of([&] { txn.commit(); }), ErrorCode::WriteConflict);
}

TEST_F(Fixture, SpilledWorkspaceIsInvisibleUntilCommit) {
  tvtest::TempDir d2;
  auto r = Repository::init(d2 / "repo", std::nullopt, tvtest::fast_options(32));
  auto t = r.create_table("t", tvtest::kv_schema());
  auto txn = r.begin(t);
  std::vector<Row> rows;
  for (int i = 0; i < 200; ++i) rows.push_back(kv(i, "s"));
  txn.insert(rows);
  EXPECT_GT(txn.spilled_objects(), 0u);
  EXPECT_TRUE(r.scan(SnapshotRef::current(t)).empty());
  auto ts = txn.commit();
  EXPECT_EQ(r.scan(SnapshotRef::current(t)).size(), 200u);
  EXPECT_TRUE(r.scan(SnapshotRef::at(t, ts - 1)).empty());
  for (const auto& e : r.scan_entries(SnapshotRef::current(t))) EXPECT_EQ(e.ts, ts);
}

TEST_F(Fixture, PersistsAcrossReopen) {
  auto path = dir / "repo2";
  {
    auto r = Repository::init(path, 3, tvtest::fast_options());
    auto t = r.create_table("t", tvtest::kv_schema());
    tvtest::insert_rows(r, t, {kv(1, "a"), kv(2, "b")});
    r.create_snapshot(t, "s");
    tvtest::insert_rows(r, t, {kv(3, "c")});
  }
  auto r = Repository::open(path, tvtest::fast_options());
  auto t = r.table_id("t");
  EXPECT_EQ(r.scan(SnapshotRef::current(t)).size(), 3u);
  EXPECT_EQ(r.scan(SnapshotRef::named(t, "s")).size(), 2u);
  EXPECT_EQ(r.retention_commits(), std::optional<std::uint64_t>(3));
  EXPECT_EQ(code_of([&] { Repository::init(path); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { Repository::open(dir / "missing"); }), ErrorCode::NotFound);
}

TEST_F(Fixture, TablesCatalog) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  EXPECT_EQ(code_of([&] { repo.create_table("t", tvtest::kv_schema()); }), ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] { repo.table_id("x"); }), ErrorCode::UnknownTable);
  Schema bad;
  EXPECT_EQ(code_of([&] { repo.create_table("b", bad); }), ErrorCode::InvalidSchema);
  EXPECT_EQ(repo.table_name(t), "t");
  repo.drop_table(t);
  EXPECT_FALSE(repo.find_table("t").has_value());
  EXPECT_TRUE(repo.table_names().empty());
}

TEST_F(Fixture, DroppedParentLosesLineage) {
  auto t = repo.create_table("t", tvtest::kv_schema());
  tvtest::insert_rows(repo, t, {kv(1, "a")});
  auto c = repo.clone_table(SnapshotRef::current(t), "c");
  auto c2 = repo.clone_table(SnapshotRef::current(t), "c2");
  EXPECT_FALSE(repo.find_common_base(c, SnapshotRef::current(c2)).has_value());
  EXPECT_TRUE(repo.find_common_base(t, SnapshotRef::current(c)).has_value());
}
