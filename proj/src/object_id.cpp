#include "tablevc/object_id.hpp"

#include <chrono>
#include <mutex>
#include <random>

#include "tablevc/error.hpp"

namespace tablevc {

namespace {

struct IdGenerator {
  std::mutex mu;
  std::mt19937_64 rng{std::random_device{}()};
  ObjectId last;

  ObjectId next() {
    std::lock_guard lock(mu);
    auto ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
    ObjectId id;
    id.hi = (ms & 0xffffffffffffULL) << 16 | (rng() & 0xffff);
    id.lo = rng();
    if (id <= last) {
      id = last;
      if (++id.lo == 0) ++id.hi;
    }
    last = id;
    return id;
  }
};

IdGenerator& generator() {
  static IdGenerator g;
  return g;
}

}  // namespace

ObjectId ObjectId::generate() { return generator().next(); }

std::string ObjectId::to_hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = kHex[(hi >> (4 * i)) & 0xf];
    out[31 - i] = kHex[(lo >> (4 * i)) & 0xf];
  }
  return out;
}

ObjectId ObjectId::from_hex(std::string_view hex) {
  if (hex.size() != 32) fail(ErrorCode::InvalidArgument, "object id must be 32 hex digits");
  ObjectId id;
  for (std::size_t i = 0; i < 32; ++i) {
    char c = hex[i];
    std::uint64_t nib;
    if (c >= '0' && c <= '9') {
      nib = static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nib = static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      fail(ErrorCode::InvalidArgument, "bad object id '" + std::string(hex) + "'");
    }
    auto& word = i < 16 ? id.hi : id.lo;
    word = (word << 4) | nib;
  }
  return id;
}

}  // namespace tablevc
