#include "tablevc/catalog.hpp"

#include <algorithm>

#include <charconv>

#include "json.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

namespace {

using nlohmann::ordered_json;

ordered_json schema_to_json(const Schema& s) {
  ordered_json cols = ordered_json::array();
  for (const auto& c : s.columns) cols.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
  return {{"columns", cols}, {"primary_key", s.primary_key}};
}

Schema schema_from_json(const ordered_json& j) {
  Schema s;
  for (const auto& c : j.at("columns")) {
    auto type = parse_column_type(c.at("type").get<std::string>());
    if (!type) fail(ErrorCode::CorruptObject, "catalog: unknown column type");
    s.columns.push_back({c.at("name").get<std::string>(), *type});
  }
  s.primary_key = j.at("primary_key").get<std::vector<std::string>>();
  return s;
}

}  // namespace

RefSpec RefSpec::parse(std::string_view text) {
  RefSpec r;
  auto at = text.find('@');
  r.table = std::string(text.substr(0, at));
  if (r.table.empty()) fail(ErrorCode::UsageError, "empty table name in reference '" + std::string(text) + "'");
  if (at == std::string_view::npos) return r;
  auto rest = text.substr(at + 1);
  if (rest.empty()) fail(ErrorCode::UsageError, "empty snapshot in reference '" + std::string(text) + "'");
  if (rest.substr(0, 3) == "ts:") {
    auto num = rest.substr(3);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), r.ts);
    if (num.empty() || ec != std::errc{} || ptr != num.data() + num.size()) {
      fail(ErrorCode::UsageError, "bad timestamp in reference '" + std::string(text) + "'");
    }
    r.kind = SnapshotRef::Kind::AtTimestamp;
    return r;
  }
  if (rest.find('@') != std::string_view::npos) {
    fail(ErrorCode::UsageError, "bad reference '" + std::string(text) + "'");
  }
  r.kind = SnapshotRef::Kind::Named;
  r.snapshot = std::string(rest);
  return r;
}

std::string RefSpec::to_string() const {
  switch (kind) {
    case SnapshotRef::Kind::Current: return table;
    case SnapshotRef::Kind::Named: return table + "@" + snapshot;
    case SnapshotRef::Kind::AtTimestamp: return table + "@ts:" + std::to_string(ts);
  }
  return table;
}

TableMeta* CatalogState::find(std::string_view name) {
  for (auto& [id, t] : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TableMeta* CatalogState::find(std::string_view name) const {
  return const_cast<CatalogState*>(this)->find(name);
}

std::string catalog_root_to_json(const CatalogState& state) {
  ordered_json j;
  j["format"] = 2;
  j["clock"] = state.clock;
  j["next_uniquifier"] = state.next_uniquifier;
  j["retention_commits"] = state.retention_commits ? ordered_json(*state.retention_commits) : ordered_json(nullptr);
  j["next_table_id"] = state.next_table_id;
  return j.dump(1) + "\n";
}

std::string table_to_json(const TableMeta& t, const CatalogState& state) {
  ordered_json tj;
  tj["id"] = static_cast<std::uint64_t>(t.id);
  tj["name"] = t.name;
  tj["clock"] = state.clock;
  tj["next_uniquifier"] = state.next_uniquifier;
  tj["schema"] = schema_to_json(t.schema);
  tj["created_ts"] = t.created_ts;
  tj["current"] = t.current.to_hex();
  auto snaps = ordered_json::object();
  for (const auto& [name, mid] : t.snapshots) snaps[name] = mid.to_hex();
  tj["snapshots"] = snaps;
  if (t.lineage) {
    tj["lineage"] = {{"parent", static_cast<std::uint64_t>(t.lineage->parent)},
                     {"manifest", t.lineage->manifest.to_hex()},
                     {"snapshot", t.lineage->snapshot ? ordered_json(*t.lineage->snapshot) : ordered_json(nullptr)}};
  } else {
    tj["lineage"] = nullptr;
  }
  auto hist = ordered_json::array();
  for (const auto& h : t.history) hist.push_back({{"until", h.until}, {"manifest", h.manifest.to_hex()}});
  tj["history"] = hist;
  return tj.dump(1) + "\n";
}

CatalogState catalog_from_json(const std::string& root, const std::vector<std::string>& tables) {
  try {
    auto j = ordered_json::parse(root);
    CatalogState s;
    s.clock = j.at("clock").get<CommitTs>();
    s.next_uniquifier = j.at("next_uniquifier").get<std::uint64_t>();
    if (!j.at("retention_commits").is_null()) s.retention_commits = j.at("retention_commits").get<std::uint64_t>();
    s.next_table_id = j.at("next_table_id").get<std::uint64_t>();
    for (const auto& text : tables) {
      auto tj = ordered_json::parse(text);
      TableMeta t;
      t.id = static_cast<TableId>(tj.at("id").get<std::uint64_t>());
      t.name = tj.at("name").get<std::string>();
      s.clock = std::max(s.clock, tj.at("clock").get<CommitTs>());
      s.next_uniquifier = std::max(s.next_uniquifier, tj.at("next_uniquifier").get<std::uint64_t>());
      s.next_table_id = std::max(s.next_table_id, static_cast<std::uint64_t>(t.id) + 1);
      t.schema = schema_from_json(tj.at("schema"));
      t.created_ts = tj.at("created_ts").get<CommitTs>();
      t.current = ManifestId::from_hex(tj.at("current").get<std::string>());
      for (const auto& [name, mid] : tj.at("snapshots").items()) {
        t.snapshots[name] = ManifestId::from_hex(mid.get<std::string>());
      }
      if (const auto& lj = tj.at("lineage"); !lj.is_null()) {
        Lineage l;
        l.parent = static_cast<TableId>(lj.at("parent").get<std::uint64_t>());
        l.manifest = ManifestId::from_hex(lj.at("manifest").get<std::string>());
        if (!lj.at("snapshot").is_null()) l.snapshot = lj.at("snapshot").get<std::string>();
        t.lineage = std::move(l);
      }
      for (const auto& hj : tj.at("history")) {
        t.history.push_back({hj.at("until").get<CommitTs>(), ManifestId::from_hex(hj.at("manifest").get<std::string>())});
      }
      if (!s.tables.emplace(t.id, std::move(t)).second) fail(ErrorCode::CorruptObject, "catalog: duplicate table id");
    }
    return s;
  } catch (const ordered_json::exception& e) {
    fail(ErrorCode::CorruptObject, std::string("catalog: ") + e.what());
  }
}

}  // namespace tablevc
