#include <gtest/gtest.h>

#include <fstream>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"
#include "tablevc/object_store.hpp"
#include "test_util.hpp"

using namespace tablevc;

namespace {

std::vector<StoredRow> make_rows(std::size_t n, CommitTs ts) {
  std::vector<StoredRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row r{Value{static_cast<std::int64_t>(i)}, Value{"v" + std::to_string(i)}};
    std::size_t idx[] = {0};
    rows.push_back({ts, encode_key(r, idx), r});
  }
  return rows;
}

void flip_byte(const std::filesystem::path& p, std::streamoff at) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(at);
  char c = 0;
  f.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  f.seekp(at);
  f.write(&c, 1);
}

}  // namespace

TEST(Crc64, KnownVector) {
  // CRC-64/XZ check value.
  EXPECT_EQ(crc64("123456789"), 0x995DC9BBDF1939FAULL);
}

TEST(ObjectStore, DataRoundTripWithGroups) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {16, false});
  auto rows = make_rows(100, 5);
  auto id = store.write_data_object(rows, 1234);
  auto obj = store.read_data_object(id);
  EXPECT_EQ(obj.schema_hash, 1234u);
  ASSERT_EQ(obj.rows.size(), 100u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(obj.rows[i].key, rows[i].key);
    EXPECT_EQ(obj.rows[i].ts, 5u);
    EXPECT_TRUE(rows_equal(obj.rows[i].values, rows[i].values));
  }
  auto reader = store.reader(id, ObjectKind::Data);
  EXPECT_EQ(reader->groups().size(), 7u);
  EXPECT_EQ(reader->min_key(), rows.front().key);
  EXPECT_EQ(reader->max_key(), rows.back().key);
  EXPECT_NO_THROW(reader->verify_file());
  auto r = reader->row_at(37);
  EXPECT_EQ(std::get<std::int64_t>(r.values[0]), 37);
  auto [g0, g1] = reader->groups_for_key(rows[40].key);
  EXPECT_LE(g0, reader->group_of(40));
  EXPECT_GT(g1, reader->group_of(40));
}

TEST(ObjectStore, RejectsUnsortedInput) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {64, false});
  auto rows = make_rows(4, 1);
  std::swap(rows[1], rows[2]);
  try {
    store.write_data_object(rows, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedInput);
  }
}

TEST(ObjectStore, DetectsCorruption) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {16, false});
  auto id = store.write_data_object(make_rows(50, 1), 0);
  auto path = store.path_for(id, ObjectKind::Data);
  flip_byte(path, 40);
  ObjectStore fresh(dir.path(), {16, false});
  try {
    fresh.read_data_object(id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptObject);
  }
}

TEST(ObjectStore, DetectsTruncation) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {16, false});
  auto id = store.write_data_object(make_rows(50, 1), 0);
  auto path = store.path_for(id, ObjectKind::Data);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  ObjectStore fresh(dir.path(), {16, false});
  EXPECT_THROW(fresh.read_data_object(id), Error);
}

TEST(ObjectStore, TombstonesAndDeadRows) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {64, false});
  auto id = store.write_data_object(make_rows(10, 1), 0);
  auto rows = make_rows(10, 1);
  std::vector<TombstoneEntry> t1{{3, rows[2].key, {id, 2}}, {5, rows[7].key, {id, 7}}};
  auto tid = store.write_tombstone_object(t1);
  auto back = store.read_tombstone_object(tid);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[1].target, (RowId{id, 7}));

  std::vector<ObjectRef> all{{tid, kMaxTs, 0}};
  EXPECT_EQ(store.dead_rows(all)->size(), 2u);
  std::vector<ObjectRef> capped{{tid, 4, 0}};
  auto dead = store.dead_rows(capped);
  EXPECT_EQ(dead->size(), 1u);
  EXPECT_TRUE(dead->count(RowId{id, 2}));
  std::vector<ObjectRef> stamped{{tid, 4, 9}};
  EXPECT_TRUE(store.dead_rows(stamped)->empty());
}

TEST(ObjectStore, PointReadsAndRemoval) {
  tvtest::TempDir dir;
  ObjectStore store(dir.path(), {8, false});
  auto id = store.write_data_object(make_rows(30, 1), 0);
  std::vector<RowId> ids{{id, 29}, {id, 0}, {id, 13}};
  auto got = store.read_rows(ids);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(std::get<std::int64_t>(got[0].values[0]), 29);
  EXPECT_EQ(std::get<std::int64_t>(got[1].values[0]), 0);
  EXPECT_EQ(std::get<std::int64_t>(got[2].values[0]), 13);

  EXPECT_EQ(store.list().size(), 1u);
  EXPECT_GT(store.remove(id, ObjectKind::Data), 0u);
  EXPECT_FALSE(store.exists(id, ObjectKind::Data));
  store.drop_caches();
  try {
    store.read_rows(ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingObject);
  }
}

TEST(ObjectIds, TimeOrderedAndHex) {
  auto a = ObjectId::generate();
  auto b = ObjectId::generate();
  EXPECT_LT(a, b);
  EXPECT_EQ(ObjectId::from_hex(a.to_hex()), a);
  EXPECT_EQ(a.to_hex().size(), 32u);
}
