#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "tablevc/error.hpp"
#include "tablevc/value.hpp"

namespace tablevc {

static_assert(std::endian::native == std::endian::little, "on-disk format assumes a little-endian host");

// Order-preserving ("memcomparable") key encoding: byte-wise comparison of two
// encoded keys agrees with compare_values applied column by column.
std::string encode_key_values(std::span<const Value> values);
std::string encode_key(const Row& row, std::span<const std::size_t> key_indices);
std::string encode_uniquifier(std::uint64_t uniquifier);
std::vector<Value> decode_key(std::string_view encoded);

// Little-endian append-only buffer writer.
class ByteWriter {
 public:
  explicit ByteWriter(std::string& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void value(const Value& v);
  void row(const Row& r);

  std::size_t size() const noexcept { return out_.size(); }

 private:
  std::string& out_;
};

// Bounds-checked reader; any overrun raises CorruptObject.
class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::string_view bytes() {
    auto n = u32();
    return take(n);
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Value value();
  Row row();

  std::size_t position() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorCode::CorruptObject, "truncated record");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace tablevc
