#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tablevc {

// Writes `bytes` to a temporary sibling and renames it over `path`, so readers
// observe either the old file or the complete new one. Throws IoFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes, bool sync);
std::string read_file(const std::filesystem::path& path);

// Read-only memory mapping of a whole file.
class MappedFile {
 public:
  MappedFile() = default;
  explicit MappedFile(const std::filesystem::path& path);
  MappedFile(MappedFile&& other) noexcept;
  MappedFile& operator=(MappedFile&& other) noexcept;
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;
  ~MappedFile();

  std::string_view bytes() const noexcept { return {data_, size_}; }
  std::size_t size() const noexcept { return size_; }

 private:
  void reset() noexcept;

  const char* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace tablevc
