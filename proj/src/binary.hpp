#pragma once

// Little-endian byte stream helpers shared by the binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "occunav/io.hpp"

namespace occunav::detail {

template <std::size_t N>
using Unsigned = std::conditional_t<N == 1, std::uint8_t,
                 std::conditional_t<N == 2, std::uint16_t,
                 std::conditional_t<N == 4, std::uint32_t, std::uint64_t>>>;

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  template <typename T>
  void put(T value) {
    using U = Unsigned<sizeof(T)>;
    const U u = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf_.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xFF));
  }

  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& buf, std::string what)
      : buf_(buf), what_(std::move(what)) {}

  void expect_magic(std::string_view magic) {
    need(magic.size(), "header");
    if (std::memcmp(buf_.data() + pos_, magic.data(), magic.size()) != 0)
      throw DataError(what_ + ": bad magic, not a " + std::string(magic) + " file");
    pos_ += magic.size();
  }

  template <typename T>
  T get(const char* section = "header") {
    using U = Unsigned<sizeof(T)>;
    need(sizeof(T), section);
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= U(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }

  std::string string(std::size_t n, const char* section = "header") {
    need(n, section);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* section) const {
    if (buf_.size() - pos_ < n)
      throw DataError(what_ + ": truncated " + section + " (payload length mismatch)");
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& what() const { return what_; }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path,
                        const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace occunav::detail
