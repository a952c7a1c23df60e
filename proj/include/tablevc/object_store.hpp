#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tablevc/file_util.hpp"
#include "tablevc/manifest.hpp"
#include "tablevc/object_id.hpp"
#include "tablevc/value.hpp"

namespace tablevc {

enum class ObjectKind : std::uint8_t { Data = 1, Tombstone = 2 };

struct StoredRow {
  CommitTs ts = 0;
  std::string key;  // memcomparable encoding
  Row values;
};

struct TombstoneEntry {
  CommitTs ts = 0;
  std::string key;
  RowId target;
};

struct DataObject {
  ObjectId id;
  std::uint64_t schema_hash = 0;
  std::vector<StoredRow> rows;
  std::string min_key;
  std::string max_key;

  std::size_t row_count() const noexcept { return rows.size(); }
};

struct TombstoneObject {
  ObjectId id;
  std::vector<TombstoneEntry> entries;
};

std::uint64_t crc64(std::string_view bytes) noexcept;

// Layout: 16-byte header ("TVC1", kind, 3 reserved, schema hash), record
// groups each with their own CRC, an index of groups, then a 40-byte footer
// (index offset, index CRC, record count, whole-file CRC, "TVCF" + pad).
class ObjectReader {
 public:
  struct Group {
    std::uint64_t offset = 0;
    std::uint32_t length = 0;
    std::uint32_t first_record = 0;
    std::uint32_t record_count = 0;
    std::uint64_t crc = 0;
    std::string first_key;
  };

  ObjectReader(ObjectId id, ObjectKind kind, MappedFile file);

  ObjectId id() const noexcept { return id_; }
  ObjectKind kind() const noexcept { return kind_; }
  std::uint64_t schema_hash() const noexcept { return schema_hash_; }
  std::uint32_t record_count() const noexcept { return record_count_; }
  std::uint64_t file_size() const noexcept { return file_.size(); }
  const std::string& min_key() const noexcept { return min_key_; }
  const std::string& max_key() const noexcept { return max_key_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }

  void verify_file() const;
  std::size_t group_of(std::uint32_t offset) const;

  std::vector<StoredRow> rows_in_group(std::size_t g) const;
  std::vector<TombstoneEntry> entries_in_group(std::size_t g) const;
  std::vector<StoredRow> all_rows() const;
  std::vector<TombstoneEntry> all_entries() const;
  StoredRow row_at(std::uint32_t offset) const;

  // Groups that may hold `key`, as a half-open range of group indices.
  std::pair<std::size_t, std::size_t> groups_for_key(std::string_view key) const;

 private:
  std::string_view group_bytes(std::size_t g) const;

  ObjectId id_;
  ObjectKind kind_;
  MappedFile file_;
  std::uint64_t schema_hash_ = 0;
  std::uint32_t record_count_ = 0;
  std::vector<Group> groups_;
  std::string min_key_;
  std::string max_key_;
};

using RowIdSet = std::unordered_set<RowId, RowIdHash>;

struct StoreOptions {
  std::uint32_t group_rows = 64;
  bool sync = true;
};

class ObjectStore {
 public:
  struct Listing {
    ObjectId id;
    ObjectKind kind;
    std::uint64_t bytes = 0;
  };

  ObjectStore(std::filesystem::path dir, StoreOptions options = {});

  ObjectId write_data_object(std::span<const StoredRow> rows, std::uint64_t schema_hash);
  ObjectId write_tombstone_object(std::span<const TombstoneEntry> entries);

  DataObject read_data_object(ObjectId id) const;
  TombstoneObject read_tombstone_object(ObjectId id) const;

  std::shared_ptr<const ObjectReader> reader(ObjectId id, ObjectKind kind) const;
  // Decoded entries of a tombstone object; cached.
  std::shared_ptr<const std::vector<TombstoneEntry>> tombstones(ObjectId id) const;

  // Targets of every tombstone admitted by the given references; cached.
  std::shared_ptr<const RowIdSet> dead_rows(std::span<const ObjectRef> tombstone_refs) const;
  // Point reads, aligned with `ids`. A missing object raises MissingObject.
  std::vector<StoredRow> read_rows(std::span<const RowId> ids) const;

  bool exists(ObjectId id, ObjectKind kind) const;
  std::uint64_t remove(ObjectId id, ObjectKind kind);
  std::vector<Listing> list() const;

  std::filesystem::path path_for(ObjectId id, ObjectKind kind) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::uint64_t bytes_written() const noexcept { return bytes_written_.load(); }
  void drop_caches();

 private:
  ObjectId write_object(ObjectKind kind, std::uint64_t schema_hash, std::uint32_t count,
                        const std::vector<std::string>& records, const std::vector<std::string>& keys);

  std::filesystem::path dir_;
  StoreOptions options_;
  std::atomic<std::uint64_t> bytes_written_{0};

  mutable std::mutex mu_;
  mutable std::unordered_map<ObjectId, std::shared_ptr<const ObjectReader>, ObjectIdHash> data_readers_;
  mutable std::unordered_map<ObjectId, std::shared_ptr<const ObjectReader>, ObjectIdHash> tomb_readers_;
  mutable std::unordered_map<ObjectId, std::shared_ptr<const std::vector<TombstoneEntry>>, ObjectIdHash> tomb_cache_;
  mutable std::unordered_map<std::string, std::shared_ptr<const RowIdSet>> dead_cache_;
};

}  // namespace tablevc
