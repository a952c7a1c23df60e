#include "tablevc/manifest.hpp"

#include <algorithm>

#include "json.hpp"
#include "tablevc/error.hpp"
#include "tablevc/file_util.hpp"

namespace tablevc {

namespace {

using nlohmann::ordered_json;

const ObjectRef* find_ref(const std::vector<ObjectRef>& refs, const ObjectId& id) noexcept {
  auto it = std::lower_bound(refs.begin(), refs.end(), id, [](const ObjectRef& r, const ObjectId& x) { return r.id < x; });
  return it != refs.end() && it->id == id ? &*it : nullptr;
}

void sort_refs(std::vector<ObjectRef>& refs) {
  std::sort(refs.begin(), refs.end(), [](const ObjectRef& a, const ObjectRef& b) { return a.id < b.id; });
  auto dup = std::adjacent_find(refs.begin(), refs.end(), [](const ObjectRef& a, const ObjectRef& b) { return a.id == b.id; });
  if (dup != refs.end()) fail(ErrorCode::Internal, "manifest references object " + dup->id.to_hex() + " twice");
}

std::vector<ObjectRef> cap_refs(const std::vector<ObjectRef>& refs, CommitTs ts) {
  std::vector<ObjectRef> out;
  out.reserve(refs.size());
  for (auto r : refs) {
    if (r.stamp != 0 && r.stamp > ts) continue;
    r.cap = std::min(r.cap, ts);
    out.push_back(r);
  }
  return out;
}

std::vector<ObjectRef> intersect_refs(const std::vector<ObjectRef>& a, const std::vector<ObjectRef>& b) {
  std::vector<ObjectRef> out;
  for (const auto& r : a) {
    if (const auto* o = find_ref(b, r.id)) {
      auto c = r;
      c.cap = std::min(r.cap, o->cap);
      out.push_back(c);
    }
  }
  return out;
}

ordered_json refs_to_json(const std::vector<ObjectRef>& refs) {
  auto arr = ordered_json::array();
  for (const auto& r : refs) {
    ordered_json j;
    j["id"] = r.id.to_hex();
    if (r.cap != kMaxTs) j["cap"] = r.cap;
    if (r.stamp != 0) j["stamp"] = r.stamp;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ObjectRef> refs_from_json(const ordered_json& arr) {
  std::vector<ObjectRef> out;
  for (const auto& j : arr) {
    ObjectRef r;
    r.id = ObjectId::from_hex(j.at("id").get<std::string>());
    r.cap = j.value("cap", kMaxTs);
    r.stamp = j.value("stamp", CommitTs{0});
    out.push_back(r);
  }
  return out;
}

}  // namespace

const ObjectRef* Manifest::find_data(const ObjectId& id) const noexcept { return find_ref(data, id); }
const ObjectRef* Manifest::find_tombstone(const ObjectId& id) const noexcept { return find_ref(tombstones, id); }

void Manifest::normalize() {
  sort_refs(data);
  sort_refs(tombstones);
}

Manifest cap_manifest(const Manifest& m, CommitTs ts) {
  if (ts >= m.created_ts) return m;
  Manifest out;
  out.data = cap_refs(m.data, ts);
  out.tombstones = cap_refs(m.tombstones, ts);
  out.created_ts = ts;
  out.schema_hash = m.schema_hash;
  return out;
}

Manifest intersect_manifests(const Manifest& a, const Manifest& b) {
  Manifest out;
  out.data = intersect_refs(a.data, b.data);
  out.tombstones = intersect_refs(a.tombstones, b.tombstones);
  out.created_ts = std::min(a.created_ts, b.created_ts);
  out.schema_hash = a.schema_hash;
  return out;
}

std::uint64_t manifest_digest(const Manifest& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  };
  for (const auto* refs : {&m.data, &m.tombstones}) {
    mix(refs->size());
    for (const auto& r : *refs) {
      mix(r.id.hi);
      mix(r.id.lo);
      mix(r.cap);
      mix(r.stamp);
    }
  }
  return h;
}

std::string manifest_to_json(const Manifest& m) {
  ordered_json j;
  j["created_ts"] = m.created_ts;
  j["schema_hash"] = m.schema_hash;
  j["data"] = refs_to_json(m.data);
  j["tombstones"] = refs_to_json(m.tombstones);
  return j.dump() + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  try {
    auto j = ordered_json::parse(text);
    Manifest m;
    m.created_ts = j.at("created_ts").get<CommitTs>();
    m.schema_hash = j.at("schema_hash").get<std::uint64_t>();
    m.data = refs_from_json(j.at("data"));
    m.tombstones = refs_from_json(j.at("tombstones"));
    m.normalize();
    return m;
  } catch (const ordered_json::exception& e) {
    fail(ErrorCode::CorruptObject, std::string("manifest: ") + e.what());
  }
}

ManifestStore::ManifestStore(std::filesystem::path dir, bool sync) : dir_(std::move(dir)), sync_(sync) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::IoFailure, "create " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ManifestStore::path_for(const ManifestId& id) const { return dir_ / (id.to_hex() + ".mf"); }

ManifestId ManifestStore::write(const Manifest& m) {
  auto id = ManifestId::generate();
  auto text = manifest_to_json(m);
  write_file_atomic(path_for(id), text, sync_);
  bytes_written_ += text.size();
  std::lock_guard lock(mu_);
  cache_[id] = std::make_shared<const Manifest>(m);
  return id;
}

std::shared_ptr<const Manifest> ManifestStore::read(const ManifestId& id) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  }
  auto path = path_for(id);
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingObject, "manifest " + id.to_hex() + " not found");
  auto m = std::make_shared<const Manifest>(manifest_from_json(read_file(path)));
  std::lock_guard lock(mu_);
  cache_[id] = m;
  return m;
}

bool ManifestStore::exists(const ManifestId& id) const { return std::filesystem::exists(path_for(id)); }

std::uint64_t ManifestStore::remove(const ManifestId& id) {
  {
    std::lock_guard lock(mu_);
    cache_.erase(id);
  }
  std::error_code ec;
  auto path = path_for(id);
  auto size = std::filesystem::file_size(path, ec);
  if (ec) return 0;
  std::filesystem::remove(path, ec);
  if (ec) fail(ErrorCode::IoFailure, "remove " + path.string() + ": " + ec.message());
  return size;
}

std::vector<ManifestId> ManifestStore::list() const {
  std::vector<ManifestId> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    auto name = entry.path().filename().string();
    if (name.size() != 35 || name.substr(32) != ".mf") continue;
    try {
      out.push_back(ManifestId::from_hex(name.substr(0, 32)));
    } catch (const Error&) {
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tablevc
