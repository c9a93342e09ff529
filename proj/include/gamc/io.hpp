#pragma once

// Little-endian binary encoding shared by the dataset and bundle formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gamc/error.hpp"

namespace gamc::io {

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void i8(std::int8_t v) { u8(static_cast<std::uint8_t>(v)); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void bytes(std::string_view s) { buf_.append(s.data(), s.size()); }

  // u16 length prefix.
  void short_string(std::string_view s) {
    if (s.size() > 0xFFFF) throw DataError("string too long for u16 length prefix");
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }

  // u32 length prefix.
  void string(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  void f64_vector(std::span<const double> v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
  }

  void i32_vector(std::span<const int> v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (int x : v) i32(x);
  }

  const std::string& buffer() const noexcept { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }

  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data, std::string context = "input")
      : data_(data), context_(std::move(context)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string_view bytes(std::size_t n) { return take(n); }

  std::string short_string() {
    const std::uint16_t n = u16();
    return std::string(take(n));
  }

  std::string string() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }

  std::vector<double> f64_vector() {
    const std::uint32_t n = u32();
    require(std::size_t{n} * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

  std::vector<int> i32_vector() {
    const std::uint32_t n = u32();
    require(std::size_t{n} * 4);
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  // Throws `truncated` unless at least n more bytes exist.
  void require(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(FormatError::Kind::truncated,
                        context_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                            std::to_string(n) + ", have " + std::to_string(remaining()) + ")");
    }
  }

  const std::string& context() const noexcept { return context_; }

 private:
  std::string_view take(std::size_t n) {
    require(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T get_le() {
    auto s = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<std::uint8_t>(s[i])) << (8 * i);
    }
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

// FNV-1a, 64-bit.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : data) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read error on '" + path + "'");
  return data;
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write error on '" + path + "'");
}

}  // namespace gamc::io
