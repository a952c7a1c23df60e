#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tablevc/repository.hpp"

namespace tvtest {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "tvc") {
    std::random_device rd;
    std::mt19937_64 rng(rd());
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline tablevc::RepoOptions fast_options(std::uint32_t object_rows = 8192) {
  tablevc::RepoOptions o;
  o.sync = false;
  o.object_rows = object_rows;
  o.spill_rows = object_rows;
  return o;
}

inline tablevc::Schema kv_schema(bool pk = true) {
  tablevc::Schema s;
  s.columns = {{"k", tablevc::ColumnType::Int64}, {"v", tablevc::ColumnType::String}};
  if (pk) s.primary_key = {"k"};
  return s;
}

inline tablevc::Row kv(std::int64_t k, std::string v) { return {tablevc::Value{k}, tablevc::Value{std::move(v)}}; }

inline std::vector<tablevc::Value> key1(std::int64_t k) { return {tablevc::Value{k}}; }

using KeyList = std::vector<std::vector<tablevc::Value>>;

inline KeyList keys(std::initializer_list<std::int64_t> ks) {
  KeyList out;
  for (auto k : ks) out.push_back(key1(k));
  return out;
}

inline void insert_rows(tablevc::Repository& repo, tablevc::TableId t, const std::vector<tablevc::Row>& rows) {
  auto txn = repo.begin(t);
  txn.insert(rows);
  txn.commit();
}

// Full physical image of a scan, for byte-level comparisons.
inline std::string scan_image(const std::vector<tablevc::ScanEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.key;
    out += '|' + e.rowid.object.to_hex() + ':' + std::to_string(e.rowid.offset) + '|' + std::to_string(e.ts) + '|';
    for (const auto& v : e.values) out += std::to_string(v.index()) + tablevc::format_value(v) + ',';
    out += '\n';
  }
  return out;
}

// Same without row addresses, which a flush of the in-memory tail reassigns.
inline std::string logical_image(const std::vector<tablevc::ScanEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.key + '|' + std::to_string(e.ts) + '|';
    for (const auto& v : e.values) out += std::to_string(v.index()) + tablevc::format_value(v) + ',';
    out += '\n';
  }
  return out;
}

}  // namespace tvtest
