#pragma once

// Little-endian fixed-width readers/writers shared by the binary formats
// (CEA1 archives, FVS1 feature matrices, TAG1/RCM1 checkpoints).

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "clinrel/error.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel::bin {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

/// Writes rows*cols float32 values, no shape header.
inline void write_f32_block(std::ostream& out, const Matrix& m) {
  for (double v : m.values()) write_f32(out, static_cast<float>(v));
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view format) : in_(in), format_(format) {}

  void expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != magic) fail("bad magic, expected '" + std::string(magic) + "'");
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    read_raw(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint8_t u8() {
    char c = 0;
    read_raw(&c, 1);
    return static_cast<std::uint8_t>(c);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string string(std::uint32_t max_len = 1u << 28) {
    const std::uint32_t n = u32();
    if (n > max_len) fail("string length " + std::to_string(n) + " is implausible");
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }

  Matrix f32_block(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = f32();
    return m;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(std::string(format_) + ": " + msg); }

 private:
  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("unexpected end of data");
  }

  std::istream& in_;
  std::string_view format_;
};

}  // namespace clinrel::bin
