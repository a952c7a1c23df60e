#include "tablevc/codec.hpp"

namespace tablevc {

namespace {

void put_be64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::uint64_t get_be64(std::string_view in, std::size_t& pos) {
  if (in.size() - pos < 8) fail(ErrorCode::CorruptObject, "truncated key");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<unsigned char>(in[pos + i]);
  pos += 8;
  return v;
}

// 0x00 bytes are escaped as 0x00 0xff; the terminator 0x00 0x01 sorts below
// any continuation, so a prefix orders before its extensions.
void put_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    out.push_back(c);
    if (c == '\0') out.push_back('\xff');
  }
  out.push_back('\0');
  out.push_back('\x01');
}

std::string get_escaped(std::string_view in, std::size_t& pos) {
  std::string out;
  while (true) {
    if (pos >= in.size()) fail(ErrorCode::CorruptObject, "unterminated key string");
    char c = in[pos++];
    if (c != '\0') {
      out.push_back(c);
      continue;
    }
    if (pos >= in.size()) fail(ErrorCode::CorruptObject, "unterminated key string");
    char next = in[pos++];
    if (next == '\x01') return out;
    if (next != '\xff') fail(ErrorCode::CorruptObject, "bad key escape");
    out.push_back('\0');
  }
}

void encode_one(std::string& out, const Value& v) {
  out.push_back(static_cast<char>(v.index()));
  switch (v.index()) {
    case 0: break;
    case 1: put_be64(out, static_cast<std::uint64_t>(std::get<1>(v)) ^ 0x8000000000000000ULL); break;
    case 2: {
      auto bits = std::bit_cast<std::uint64_t>(std::get<2>(v));
      bits = (bits & 0x8000000000000000ULL) ? ~bits : bits | 0x8000000000000000ULL;
      put_be64(out, bits);
      break;
    }
    case 3: put_escaped(out, std::get<3>(v)); break;
    case 4: put_escaped(out, std::get<4>(v).data); break;
    case 5: out.push_back(std::get<5>(v) ? '\x01' : '\x00'); break;
  }
}

}  // namespace

std::string encode_key_values(std::span<const Value> values) {
  std::string out;
  for (const auto& v : values) encode_one(out, v);
  return out;
}

std::string encode_key(const Row& row, std::span<const std::size_t> key_indices) {
  std::string out;
  for (auto idx : key_indices) encode_one(out, row.at(idx));
  return out;
}

std::string encode_uniquifier(std::uint64_t uniquifier) {
  std::string out;
  encode_one(out, Value{static_cast<std::int64_t>(uniquifier)});
  return out;
}

std::vector<Value> decode_key(std::string_view encoded) {
  std::vector<Value> out;
  std::size_t pos = 0;
  while (pos < encoded.size()) {
    auto tag = static_cast<unsigned char>(encoded[pos++]);
    switch (tag) {
      case 0: out.emplace_back(std::monostate{}); break;
      case 1: out.emplace_back(static_cast<std::int64_t>(get_be64(encoded, pos) ^ 0x8000000000000000ULL)); break;
      case 2: {
        auto bits = get_be64(encoded, pos);
        bits = (bits & 0x8000000000000000ULL) ? bits & ~0x8000000000000000ULL : ~bits;
        out.emplace_back(std::bit_cast<double>(bits));
        break;
      }
      case 3: out.emplace_back(get_escaped(encoded, pos)); break;
      case 4: out.emplace_back(Bytes{get_escaped(encoded, pos)}); break;
      case 5: {
        if (pos >= encoded.size()) fail(ErrorCode::CorruptObject, "truncated key");
        out.emplace_back(encoded[pos++] != '\0');
        break;
      }
      default: fail(ErrorCode::CorruptObject, "bad key tag");
    }
  }
  return out;
}

void ByteWriter::value(const Value& v) {
  u8(static_cast<std::uint8_t>(v.index()));
  switch (v.index()) {
    case 0: break;
    case 1: u64(static_cast<std::uint64_t>(std::get<1>(v))); break;
    case 2: u64(std::bit_cast<std::uint64_t>(std::get<2>(v))); break;
    case 3: bytes(std::get<3>(v)); break;
    case 4: bytes(std::get<4>(v).data); break;
    case 5: u8(std::get<5>(v) ? 1 : 0); break;
  }
}

void ByteWriter::row(const Row& r) {
  u16(static_cast<std::uint16_t>(r.size()));
  for (const auto& v : r) value(v);
}

Value ByteReader::value() {
  switch (u8()) {
    case 0: return std::monostate{};
    case 1: return static_cast<std::int64_t>(u64());
    case 2: return std::bit_cast<double>(u64());
    case 3: return std::string(bytes());
    case 4: return Bytes{std::string(bytes())};
    case 5: return u8() != 0;
    default: fail(ErrorCode::CorruptObject, "bad value tag");
  }
}

Row ByteReader::row() {
  auto n = u16();
  Row r;
  r.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) r.push_back(value());
  return r;
}

}  // namespace tablevc
