#include "tablevc/object_store.hpp"

#include <algorithm>
#include <boost/crc.hpp>
#include <cstring>

#include "tablevc/codec.hpp"
#include "tablevc/error.hpp"

namespace tablevc {

namespace {

constexpr char kMagic[4] = {'T', 'V', 'C', '1'};
constexpr char kFooterMagic[4] = {'T', 'V', 'C', 'F'};
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kFooterSize = 40;
constexpr std::size_t kCacheLimit = 4096;

using Crc64 = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;

std::string_view extension(ObjectKind kind) { return kind == ObjectKind::Data ? ".obj" : ".tmb"; }

void encode_data_record(std::string& out, const StoredRow& r) {
  ByteWriter w(out);
  w.u64(r.ts);
  w.bytes(r.key);
  w.row(r.values);
}

void encode_tomb_record(std::string& out, const TombstoneEntry& e) {
  ByteWriter w(out);
  w.u64(e.ts);
  w.bytes(e.key);
  w.u64(e.target.object.hi);
  w.u64(e.target.object.lo);
  w.u32(e.target.offset);
}

StoredRow decode_data_record(ByteReader& r) {
  StoredRow row;
  row.ts = r.u64();
  row.key = std::string(r.bytes());
  row.values = r.row();
  return row;
}

TombstoneEntry decode_tomb_record(ByteReader& r) {
  TombstoneEntry e;
  e.ts = r.u64();
  e.key = std::string(r.bytes());
  e.target.object.hi = r.u64();
  e.target.object.lo = r.u64();
  e.target.offset = r.u32();
  return e;
}

template <typename T>
void check_sorted(std::span<const T> items) {
  if (items.empty()) fail(ErrorCode::EmptyInput, "objects must hold at least one record");
  for (std::size_t i = 1; i < items.size(); ++i) {
    const auto& a = items[i - 1];
    const auto& b = items[i];
    if (b.key < a.key || (b.key == a.key && b.ts < a.ts)) {
      fail(ErrorCode::UnsortedInput, "record " + std::to_string(i) + " is out of key order");
    }
  }
}

template <typename Map>
void cache_put(Map& map, const ObjectId& id, typename Map::mapped_type value) {
  if (map.size() >= kCacheLimit) map.clear();
  map.emplace(id, std::move(value));
}

}  // namespace

std::uint64_t crc64(std::string_view bytes) noexcept {
  Crc64 crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

ObjectReader::ObjectReader(ObjectId id, ObjectKind kind, MappedFile file)
    : id_(id), kind_(kind), file_(std::move(file)) {
  auto bytes = file_.bytes();
  auto corrupt = [&](const std::string& why) { fail(ErrorCode::CorruptObject, id_.to_hex() + ": " + why); };
  if (bytes.size() < kHeaderSize + kFooterSize) corrupt("file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic");
  if (static_cast<std::uint8_t>(bytes[4]) != static_cast<std::uint8_t>(kind)) corrupt("unexpected object kind");
  if (std::memcmp(bytes.data() + bytes.size() - 8, kFooterMagic, 4) != 0) corrupt("bad footer magic");

  ByteReader header(bytes.substr(8, 8));
  schema_hash_ = header.u64();

  auto footer_at = bytes.size() - kFooterSize;
  ByteReader footer(bytes.substr(footer_at, kFooterSize));
  auto index_offset = footer.u64();
  auto index_crc = footer.u64();
  auto count = footer.u64();
  if (index_offset < kHeaderSize || index_offset > footer_at) corrupt("bad index offset");
  auto index = bytes.substr(index_offset, footer_at - index_offset);
  if (crc64(index) != index_crc) corrupt("index checksum mismatch");
  if (count > UINT32_MAX) corrupt("bad record count");
  record_count_ = static_cast<std::uint32_t>(count);

  ByteReader r(index);
  auto n = r.u32();
  groups_.reserve(n);
  std::uint64_t expected = kHeaderSize;
  std::uint32_t records = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    Group g;
    g.offset = r.u64();
    g.length = r.u32();
    g.first_record = r.u32();
    g.record_count = r.u32();
    g.crc = r.u64();
    g.first_key = std::string(r.bytes());
    if (g.offset != expected || g.first_record != records) corrupt("inconsistent group index");
    expected += g.length;
    records += g.record_count;
    groups_.push_back(std::move(g));
  }
  min_key_ = std::string(r.bytes());
  max_key_ = std::string(r.bytes());
  if (!r.done() || expected != index_offset || records != record_count_) corrupt("inconsistent group index");
}

void ObjectReader::verify_file() const {
  auto bytes = file_.bytes();
  ByteReader r(bytes.substr(bytes.size() - 16, 8));
  if (crc64(bytes.substr(0, bytes.size() - 16)) != r.u64()) {
    fail(ErrorCode::CorruptObject, id_.to_hex() + ": file checksum mismatch");
  }
}

std::size_t ObjectReader::group_of(std::uint32_t offset) const {
  if (offset >= record_count_) {
    fail(ErrorCode::NotFound, "offset " + std::to_string(offset) + " out of range in " + id_.to_hex());
  }
  auto it = std::upper_bound(groups_.begin(), groups_.end(), offset,
                             [](std::uint32_t off, const Group& g) { return off < g.first_record; });
  return static_cast<std::size_t>(it - groups_.begin()) - 1;
}

std::string_view ObjectReader::group_bytes(std::size_t g) const {
  const auto& grp = groups_.at(g);
  auto bytes = file_.bytes().substr(grp.offset, grp.length);
  if (crc64(bytes) != grp.crc) fail(ErrorCode::CorruptObject, id_.to_hex() + ": group checksum mismatch");
  return bytes;
}

std::vector<StoredRow> ObjectReader::rows_in_group(std::size_t g) const {
  if (kind_ != ObjectKind::Data) fail(ErrorCode::Internal, "rows requested from a tombstone object");
  ByteReader r(group_bytes(g));
  std::vector<StoredRow> out;
  out.reserve(groups_[g].record_count);
  for (std::uint32_t i = 0; i < groups_[g].record_count; ++i) out.push_back(decode_data_record(r));
  if (!r.done()) fail(ErrorCode::CorruptObject, id_.to_hex() + ": trailing bytes in group");
  return out;
}

std::vector<TombstoneEntry> ObjectReader::entries_in_group(std::size_t g) const {
  if (kind_ != ObjectKind::Tombstone) fail(ErrorCode::Internal, "entries requested from a data object");
  ByteReader r(group_bytes(g));
  std::vector<TombstoneEntry> out;
  out.reserve(groups_[g].record_count);
  for (std::uint32_t i = 0; i < groups_[g].record_count; ++i) out.push_back(decode_tomb_record(r));
  if (!r.done()) fail(ErrorCode::CorruptObject, id_.to_hex() + ": trailing bytes in group");
  return out;
}

std::vector<StoredRow> ObjectReader::all_rows() const {
  verify_file();
  std::vector<StoredRow> out;
  out.reserve(record_count_);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto rows = rows_in_group(g);
    std::move(rows.begin(), rows.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<TombstoneEntry> ObjectReader::all_entries() const {
  verify_file();
  std::vector<TombstoneEntry> out;
  out.reserve(record_count_);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto entries = entries_in_group(g);
    std::move(entries.begin(), entries.end(), std::back_inserter(out));
  }
  return out;
}

StoredRow ObjectReader::row_at(std::uint32_t offset) const {
  auto g = group_of(offset);
  ByteReader r(group_bytes(g));
  StoredRow row;
  for (std::uint32_t i = groups_[g].first_record; i <= offset; ++i) row = decode_data_record(r);
  return row;
}

std::pair<std::size_t, std::size_t> ObjectReader::groups_for_key(std::string_view key) const {
  if (groups_.empty() || key < min_key_ || key > max_key_) return {0, 0};
  auto lo = std::lower_bound(groups_.begin(), groups_.end(), key,
                             [](const Group& g, std::string_view k) { return g.first_key < k; });
  if (lo != groups_.begin()) --lo;
  auto hi = std::upper_bound(lo, groups_.end(), key,
                             [](std::string_view k, const Group& g) { return k < g.first_key; });
  return {static_cast<std::size_t>(lo - groups_.begin()), static_cast<std::size_t>(hi - groups_.begin())};
}

ObjectStore::ObjectStore(std::filesystem::path dir, StoreOptions options)
    : dir_(std::move(dir)), options_(options) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::IoFailure, "create " + dir_.string() + ": " + ec.message());
  if (options_.group_rows == 0) options_.group_rows = 1;
}

std::filesystem::path ObjectStore::path_for(ObjectId id, ObjectKind kind) const {
  auto p = dir_ / id.to_hex();
  p += extension(kind);
  return p;
}

ObjectId ObjectStore::write_data_object(std::span<const StoredRow> rows, std::uint64_t schema_hash) {
  check_sorted(rows);
  auto width = rows.front().values.size();
  std::vector<std::string> records;
  std::vector<std::string> keys;
  records.reserve(rows.size());
  keys.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.values.size() != width) fail(ErrorCode::SchemaMismatch, "rows of one object differ in width");
    encode_data_record(records.emplace_back(), r);
    keys.push_back(r.key);
  }
  return write_object(ObjectKind::Data, schema_hash, static_cast<std::uint32_t>(rows.size()), records, keys);
}

ObjectId ObjectStore::write_tombstone_object(std::span<const TombstoneEntry> entries) {
  check_sorted(entries);
  std::vector<std::string> records;
  std::vector<std::string> keys;
  records.reserve(entries.size());
  keys.reserve(entries.size());
  for (const auto& e : entries) {
    encode_tomb_record(records.emplace_back(), e);
    keys.push_back(e.key);
  }
  return write_object(ObjectKind::Tombstone, 0, static_cast<std::uint32_t>(entries.size()), records, keys);
}

ObjectId ObjectStore::write_object(ObjectKind kind, std::uint64_t schema_hash, std::uint32_t count,
                                   const std::vector<std::string>& records, const std::vector<std::string>& keys) {
  std::string out;
  ByteWriter w(out);
  w.raw(kMagic, 4);
  w.u8(static_cast<std::uint8_t>(kind));
  w.raw("\0\0\0", 3);
  w.u64(schema_hash);

  std::string index;
  ByteWriter iw(index);
  auto group_count = (count + options_.group_rows - 1) / options_.group_rows;
  iw.u32(group_count);
  for (std::uint32_t g = 0; g < group_count; ++g) {
    auto first = g * options_.group_rows;
    auto last = std::min(count, first + options_.group_rows);
    auto start = out.size();
    for (auto i = first; i < last; ++i) out += records[i];
    std::string_view body(out.data() + start, out.size() - start);
    iw.u64(start);
    iw.u32(static_cast<std::uint32_t>(body.size()));
    iw.u32(first);
    iw.u32(last - first);
    iw.u64(crc64(body));
    iw.bytes(keys[first]);
  }
  iw.bytes(keys.front());
  iw.bytes(keys.back());

  auto index_offset = out.size();
  out += index;
  w.u64(index_offset);
  w.u64(crc64(index));
  w.u64(count);
  auto file_crc = crc64(out);
  w.u64(file_crc);
  w.raw(kFooterMagic, 4);
  w.u32(0);

  auto oid = ObjectId::generate();
  write_file_atomic(path_for(oid, kind), out, options_.sync);
  bytes_written_ += out.size();
  return oid;
}

std::shared_ptr<const ObjectReader> ObjectStore::reader(ObjectId id, ObjectKind kind) const {
  auto& map = kind == ObjectKind::Data ? data_readers_ : tomb_readers_;
  {
    std::lock_guard lock(mu_);
    if (auto it = map.find(id); it != map.end()) return it->second;
  }
  std::shared_ptr<const ObjectReader> rd;
  try {
    rd = std::make_shared<ObjectReader>(id, kind, MappedFile(path_for(id, kind)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) fail(ErrorCode::NotFound, "object " + id.to_hex() + " not found");
    throw;
  }
  std::lock_guard lock(mu_);
  cache_put(map, id, rd);
  return rd;
}

std::shared_ptr<const std::vector<TombstoneEntry>> ObjectStore::tombstones(ObjectId id) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = tomb_cache_.find(id); it != tomb_cache_.end()) return it->second;
  }
  auto entries = std::make_shared<const std::vector<TombstoneEntry>>(reader(id, ObjectKind::Tombstone)->all_entries());
  std::lock_guard lock(mu_);
  cache_put(tomb_cache_, id, entries);
  return entries;
}

DataObject ObjectStore::read_data_object(ObjectId id) const {
  auto rd = reader(id, ObjectKind::Data);
  DataObject obj;
  obj.id = id;
  obj.schema_hash = rd->schema_hash();
  obj.rows = rd->all_rows();
  obj.min_key = rd->min_key();
  obj.max_key = rd->max_key();
  return obj;
}

TombstoneObject ObjectStore::read_tombstone_object(ObjectId id) const {
  TombstoneObject obj;
  obj.id = id;
  obj.entries = *tombstones(id);
  return obj;
}

std::shared_ptr<const RowIdSet> ObjectStore::dead_rows(std::span<const ObjectRef> tombstone_refs) const {
  std::string cache_key;
  cache_key.reserve(tombstone_refs.size() * 32);
  for (const auto& r : tombstone_refs) {
    ByteWriter w(cache_key);
    w.u64(r.id.hi);
    w.u64(r.id.lo);
    w.u64(r.cap);
    w.u64(r.stamp);
  }
  {
    std::lock_guard lock(mu_);
    if (auto it = dead_cache_.find(cache_key); it != dead_cache_.end()) return it->second;
  }
  auto set = std::make_shared<RowIdSet>();
  for (const auto& r : tombstone_refs) {
    std::shared_ptr<const std::vector<TombstoneEntry>> entries;
    try {
      entries = tombstones(r.id);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotFound) fail(ErrorCode::MissingObject, e.what());
      throw;
    }
    for (const auto& e : *entries) {
      if (r.admits(e.ts)) set->insert(e.target);
    }
  }
  std::lock_guard lock(mu_);
  if (dead_cache_.size() >= 64) dead_cache_.clear();
  dead_cache_.emplace(std::move(cache_key), set);
  return set;
}

std::vector<StoredRow> ObjectStore::read_rows(std::span<const RowId> ids) const {
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<StoredRow> out(ids.size());
  std::shared_ptr<const ObjectReader> rd;
  std::size_t group = SIZE_MAX;
  std::vector<StoredRow> rows;
  for (auto i : order) {
    const auto& rid = ids[i];
    if (!rd || rd->id() != rid.object) {
      try {
        rd = reader(rid.object, ObjectKind::Data);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) fail(ErrorCode::MissingObject, e.what());
        throw;
      }
      group = SIZE_MAX;
    }
    auto g = rd->group_of(rid.offset);
    if (g != group) {
      rows = rd->rows_in_group(g);
      group = g;
    }
    out[i] = rows[rid.offset - rd->groups()[g].first_record];
  }
  return out;
}

bool ObjectStore::exists(ObjectId id, ObjectKind kind) const { return std::filesystem::exists(path_for(id, kind)); }

std::uint64_t ObjectStore::remove(ObjectId id, ObjectKind kind) {
  {
    std::lock_guard lock(mu_);
    data_readers_.erase(id);
    tomb_readers_.erase(id);
    tomb_cache_.erase(id);
    dead_cache_.clear();
  }
  auto path = path_for(id, kind);
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) return 0;
  if (!std::filesystem::remove(path, ec) || ec) {
    fail(ErrorCode::IoFailure, "remove " + path.string() + ": " + ec.message());
  }
  return size;
}

std::vector<ObjectStore::Listing> ObjectStore::list() const {
  std::vector<Listing> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (name.size() != 36) continue;
    auto ext = name.substr(32);
    ObjectKind kind;
    if (ext == ".obj") {
      kind = ObjectKind::Data;
    } else if (ext == ".tmb") {
      kind = ObjectKind::Tombstone;
    } else {
      continue;
    }
    try {
      out.push_back({ObjectId::from_hex(name.substr(0, 32)), kind, entry.file_size()});
    } catch (const Error&) {
    }
  }
  std::sort(out.begin(), out.end(), [](const Listing& a, const Listing& b) {
    return std::tie(a.id, a.kind) < std::tie(b.id, b.kind);
  });
  return out;
}

void ObjectStore::drop_caches() {
  std::lock_guard lock(mu_);
  data_readers_.clear();
  tomb_readers_.clear();
  tomb_cache_.clear();
  dead_cache_.clear();
}

}  // namespace tablevc
