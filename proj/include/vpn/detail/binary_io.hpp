#pragma once

// Little-endian stream helpers shared by every on-disk format. All formats
// open with a four byte magic followed by a u32 version.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vpn/error.hpp"

namespace vpn::detail {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_span(std::span<const T> values) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size_bytes());
  }

  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  /// Appends another writer's bytes as a u64 length-prefixed section.
  void put_section(const ByteWriter& section) {
    put(static_cast<std::uint64_t>(section.size()));
    buf_.insert(buf_.end(), section.buf_.begin(), section.buf_.end());
  }

  std::size_t size() const noexcept { return buf_.size(); }
  const std::vector<char>& bytes() const noexcept { return buf_; }

  void write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) fail(ErrorCode::io, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

/// Bounds-checked reader. Running past the end is a corruption error, never UB.
class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_into(std::span<T> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  /// Reads a u64 length prefix and returns a reader over exactly that many bytes.
  ByteReader get_section() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::vector<char> sub(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                          buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return ByteReader(std::move(sub));
  }

  void expect_magic(std::string_view magic, std::uint32_t version) {
    if (remaining() < magic.size() + sizeof(std::uint32_t))
      fail(ErrorCode::format, "file too short for header");
    if (std::string_view(buf_.data() + pos_, magic.size()) != magic)
      fail(ErrorCode::format, "bad magic, expected " + std::string(magic));
    pos_ += magic.size();
    const auto v = get<std::uint32_t>();
    if (v != version)
      fail(ErrorCode::format, "unsupported version " + std::to_string(v) + " for " + std::string(magic));
  }

  std::size_t remaining() const noexcept { return buf_.size() - pos_; }
  bool done() const noexcept { return pos_ == buf_.size(); }

  void expect_done(std::string_view what) const {
    if (!done()) fail(ErrorCode::corruption, std::string(what) + ": trailing bytes");
  }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) fail(ErrorCode::corruption, "truncated payload");
  }

  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace vpn::detail
