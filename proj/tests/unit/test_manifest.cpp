#include <gtest/gtest.h>

#include "tablevc/catalog.hpp"
#include "tablevc/error.hpp"
#include "tablevc/manifest.hpp"
#include "test_util.hpp"

using namespace tablevc;

namespace {

Manifest sample() {
  Manifest m;
  auto a = ObjectId::generate();
  auto b = ObjectId::generate();
  auto c = ObjectId::generate();
  m.data = {{a, kMaxTs, 0}, {b, 9, 0}, {c, kMaxTs, 12}};
  m.tombstones = {{ObjectId::generate(), kMaxTs, 7}};
  m.created_ts = 20;
  m.schema_hash = 99;
  m.normalize();
  return m;
}

}  // namespace

TEST(Manifest, CapDropsLaterStampsAndLowersCaps) {
  auto m = sample();
  EXPECT_EQ(cap_manifest(m, 25), m);
  auto c = cap_manifest(m, 8);
  EXPECT_EQ(c.created_ts, 8u);
  ASSERT_EQ(c.data.size(), 2u);
  for (const auto& r : c.data) EXPECT_LE(r.cap, 8u);
  EXPECT_EQ(c.tombstones.size(), 1u);
  EXPECT_TRUE(cap_manifest(m, 6).tombstones.empty());
  auto c10 = cap_manifest(m, 10);
  EXPECT_EQ(c10.data.size(), 2u);
  EXPECT_EQ(c10.data[1].cap, 9u);
}

TEST(Manifest, IntersectTakesSmallerCaps) {
  auto m = sample();
  Manifest other;
  other.data = {m.data[0], {m.data[1].id, 4, 0}, {ObjectId::generate(), kMaxTs, 0}};
  other.data[0].cap = 15;
  other.created_ts = 18;
  other.normalize();
  auto x = intersect_manifests(m, other);
  ASSERT_EQ(x.data.size(), 2u);
  EXPECT_EQ(x.data[0].cap, 15u);
  EXPECT_EQ(x.data[1].cap, 4u);
  EXPECT_TRUE(x.tombstones.empty());
  EXPECT_EQ(x.created_ts, 18u);
}

TEST(Manifest, JsonRoundTripAndDigest) {
  auto m = sample();
  auto back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(manifest_digest(back), manifest_digest(m));
  auto changed = m;
  changed.data[0].cap = 3;
  EXPECT_NE(manifest_digest(changed), manifest_digest(m));
  // created_ts is not part of the version's identity
  changed = m;
  changed.created_ts = 1;
  EXPECT_EQ(manifest_digest(changed), manifest_digest(m));
}

TEST(Manifest, DuplicateReferenceRejected) {
  auto m = sample();
  m.data.push_back(m.data[0]);
  EXPECT_THROW(m.normalize(), Error);
}

TEST(ManifestStore, WriteReadRemove) {
  tvtest::TempDir dir;
  ManifestStore ms(dir.path(), false);
  auto m = sample();
  auto id = ms.write(m);
  EXPECT_TRUE(ms.exists(id));
  EXPECT_EQ(*ms.read(id), m);
  EXPECT_EQ(ms.list().size(), 1u);
  EXPECT_GT(ms.remove(id), 0u);
  EXPECT_FALSE(ms.exists(id));
}

TEST(RefSpec, ParseForms) {
  auto cur = RefSpec::parse("orders");
  EXPECT_EQ(cur.kind, SnapshotRef::Kind::Current);
  EXPECT_EQ(cur.table, "orders");
  auto named = RefSpec::parse("orders@sn1");
  EXPECT_EQ(named.kind, SnapshotRef::Kind::Named);
  EXPECT_EQ(named.snapshot, "sn1");
  auto ts = RefSpec::parse("orders@ts:42");
  EXPECT_EQ(ts.kind, SnapshotRef::Kind::AtTimestamp);
  EXPECT_EQ(ts.ts, 42u);
  EXPECT_EQ(ts.to_string(), "orders@ts:42");
  EXPECT_EQ(RefSpec::parse(named.to_string()), named);
  for (const char* bad : {"", "@x", "t@", "t@ts:", "t@ts:4x", "t@a@b"}) {
    EXPECT_THROW(RefSpec::parse(bad), Error) << bad;
  }
}

TEST(Catalog, JsonRoundTrip) {
  CatalogState st;
  st.clock = 17;
  st.next_uniquifier = 400;
  st.retention_commits = 5;
  st.next_table_id = 3;
  TableMeta t;
  t.id = TableId{1};
  t.name = "orders";
  t.schema = tvtest::kv_schema(true);
  t.created_ts = 2;
  t.current = ObjectId::generate();
  t.snapshots["sn1"] = ObjectId::generate();
  t.history = {{5, ObjectId::generate()}, {9, ObjectId::generate()}};
  TableMeta c = t;
  c.id = TableId{2};
  c.name = "orders_clone";
  c.snapshots.clear();
  c.history.clear();
  c.lineage = Lineage{TableId{1}, t.snapshots["sn1"], std::string("sn1")};
  st.tables[t.id] = t;
  st.tables[c.id] = c;

  auto root = catalog_root_to_json(st);
  std::vector<std::string> docs{table_to_json(t, st), table_to_json(c, st)};
  auto back = catalog_from_json(root, docs);
  EXPECT_EQ(back.clock, 17u);
  EXPECT_EQ(back.next_uniquifier, 400u);
  EXPECT_EQ(back.next_table_id, 3u);
  EXPECT_EQ(back.retention_commits, std::optional<std::uint64_t>(5));
  ASSERT_EQ(back.tables.size(), 2u);
  const auto* bt = back.find("orders");
  ASSERT_NE(bt, nullptr);
  EXPECT_EQ(bt->schema, t.schema);
  EXPECT_EQ(bt->snapshots, t.snapshots);
  ASSERT_EQ(bt->history.size(), 2u);
  EXPECT_EQ(bt->history[1].until, 9u);
  const auto* bc = back.find("orders_clone");
  ASSERT_NE(bc, nullptr);
  ASSERT_TRUE(bc->lineage.has_value());
  EXPECT_EQ(bc->lineage->parent, TableId{1});
  EXPECT_EQ(bc->lineage->snapshot, std::optional<std::string>("sn1"));
  EXPECT_EQ(back.find("nope"), nullptr);
}

TEST(Catalog, CountersRecoverFromNewestTableDocument) {
  CatalogState st;
  st.clock = 5;
  st.next_uniquifier = 10;
  auto root = catalog_root_to_json(st);
  TableMeta t;
  t.id = TableId{7};
  t.name = "t";
  t.schema = tvtest::kv_schema(false);
  t.current = ObjectId::generate();
  CatalogState later = st;
  later.clock = 9;
  later.next_uniquifier = 44;
  auto back = catalog_from_json(root, {table_to_json(t, later)});
  EXPECT_EQ(back.clock, 9u);
  EXPECT_EQ(back.next_uniquifier, 44u);
  EXPECT_EQ(back.next_table_id, 8u);
  EXPECT_THROW(catalog_from_json(root, {table_to_json(t, later), table_to_json(t, st)}), Error);
  EXPECT_THROW(catalog_from_json("{", {}), Error);
}
