#pragma once

#include <cstdint>
#include <filesystem>
#include <atomic>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <optional>
#include <string>
#include <vector>

#include "tablevc/object_id.hpp"

namespace tablevc {

using ManifestId = ObjectId;

// A reference from a manifest to one object. Row visibility uses the
// effective timestamp (the stamp when set, otherwise the row's own commit ts):
// a row is part of the version iff effective_ts <= cap. Objects written before
// their transaction committed carry the commit ts as a stamp.
struct ObjectRef {
  ObjectId id;
  CommitTs cap = kMaxTs;
  CommitTs stamp = 0;

  CommitTs effective(CommitTs row_ts) const noexcept { return stamp != 0 ? stamp : row_ts; }
  bool admits(CommitTs row_ts) const noexcept { return effective(row_ts) <= cap; }
  bool operator==(const ObjectRef&) const = default;
};

struct Manifest {
  std::vector<ObjectRef> data;        // sorted by id
  std::vector<ObjectRef> tombstones;  // sorted by id
  CommitTs created_ts = 0;
  std::uint64_t schema_hash = 0;

  const ObjectRef* find_data(const ObjectId& id) const noexcept;
  const ObjectRef* find_tombstone(const ObjectId& id) const noexcept;
  bool empty() const noexcept { return data.empty() && tombstones.empty(); }
  void normalize();

  bool operator==(const Manifest&) const = default;
};

// Same version restricted to rows and tombstones committed at or before ts.
Manifest cap_manifest(const Manifest& m, CommitTs ts);
// Objects present in both, each visible up to the smaller of the two caps.
Manifest intersect_manifests(const Manifest& a, const Manifest& b);
std::uint64_t manifest_digest(const Manifest& m);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

class ManifestStore {
 public:
  ManifestStore(std::filesystem::path dir, bool sync);

  ManifestId write(const Manifest& m);
  std::shared_ptr<const Manifest> read(const ManifestId& id) const;
  bool exists(const ManifestId& id) const;
  std::uint64_t remove(const ManifestId& id);
  std::vector<ManifestId> list() const;
  std::uint64_t bytes_written() const noexcept { return bytes_written_.load(); }

 private:
  std::filesystem::path path_for(const ManifestId& id) const;

  std::filesystem::path dir_;
  bool sync_;
  std::atomic<std::uint64_t> bytes_written_{0};
  mutable std::mutex mu_;
  mutable std::unordered_map<ManifestId, std::shared_ptr<const Manifest>, ObjectIdHash> cache_;
};

}  // namespace tablevc
