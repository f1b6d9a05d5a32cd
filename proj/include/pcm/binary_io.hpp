#ifndef PCM_BINARY_IO_HPP_
#define PCM_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "pcm/error.hpp"

namespace pcm::binary {

// Little-endian scalar writer/reader over std::fstream.

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("failed writing " + path_.string());
  }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { v = to_little_endian(v); bytes(&v, 4); }
  void u64(std::uint64_t v) { v = to_little_endian(v); bytes(&v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(data[i]);
  }
  void string(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError(path_.string() + ": truncated file");
    }
  }
  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    bytes(got.data(), got.size());
    if (got != m) throw ParseError(path_.string() + ": bad magic, expected " + std::string(m));
  }
  std::uint8_t u8() {
    std::uint8_t v = 0;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    bytes(&v, 4);
    return to_little_endian(v);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    bytes(&v, 8);
    return to_little_endian(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = f64();
  }
  std::string string(std::size_t max_len = 1 << 20) {
    const auto n = u64();
    if (n > max_len) throw ParseError(path_.string() + ": string field too long");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  // Guards size fields against absurd values before allocating.
  std::uint64_t bounded_u64(std::uint64_t max, const char* what) {
    const auto v = u64();
    if (v > max) throw ParseError(path_.string() + ": implausible " + what);
    return v;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace pcm::binary

#endif  // PCM_BINARY_IO_HPP_
