#pragma once
// Canonical wire-format helpers. All multi-byte integers are little-endian
// unless a field is explicitly documented big-endian (group element and scalar
// encodings are big-endian byte strings produced by the algebra module).

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seabrew {

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { for (int i = 0; i < 2; ++i) buf_.push_back(std::uint8_t(v >> (8 * i))); }
  void u32(std::uint32_t v) { for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i))); }
  void u64(std::uint64_t v) { for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(v >> (8 * i))); }
  void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(std::string_view s) {  // u16 length prefix + UTF-8 bytes
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void blob(std::span<const std::uint8_t> b) {  // u32 length prefix + bytes
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  Bytes take() { return std::move(buf_); }
  const Bytes& bytes() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

// Bounds-checked sequential reader; any read past the end poisons the reader.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return ok_ && avail(1) ? b_[pos_++] : fail8(); }
  std::uint16_t u16() { return read_le<std::uint16_t>(2); }
  std::uint32_t u32() { return read_le<std::uint32_t>(4); }
  std::uint64_t u64() { return read_le<std::uint64_t>(8); }
  std::span<const std::uint8_t> raw(std::size_t n) {
    if (!ok_ || !avail(n)) { ok_ = false; return {}; }
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    std::size_t n = u16();
    auto s = raw(n);
    return ok_ ? std::string(s.begin(), s.end()) : std::string();
  }
  Bytes blob() {
    std::size_t n = u32();
    auto s = raw(n);
    return ok_ ? Bytes(s.begin(), s.end()) : Bytes();
  }
  bool ok() const { return ok_; }
  bool done() const { return ok_ && pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  template <typename T>
  T read_le(std::size_t n) {
    if (!ok_ || !avail(n)) { ok_ = false; return T{}; }
    T v{};
    for (std::size_t i = 0; i < n; ++i) v |= T(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  std::uint8_t fail8() { ok_ = false; return 0; }
  bool avail(std::size_t n) const { return b_.size() - pos_ >= n; }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  bool ok_ = true;
};

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace seabrew
