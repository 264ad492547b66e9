#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

// Little-endian primitives shared by the cube and checkpoint formats. Byte
// order is produced explicitly, so files are identical on any host.

namespace hsinoise {

/// Malformed or truncated binary file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace binary {

inline void write_uint(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(buf, bytes);
}

inline std::uint64_t read_uint(std::istream& is, int bytes, const char* what) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), bytes)) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void write_u16(std::ostream& os, std::uint16_t v) { write_uint(os, v, 2); }
inline void write_u32(std::ostream& os, std::uint32_t v) { write_uint(os, v, 4); }
inline void write_f64(std::ostream& os, double v) {
  write_uint(os, std::bit_cast<std::uint64_t>(v), 8);
}

inline std::uint16_t read_u16(std::istream& is, const char* what) {
  return static_cast<std::uint16_t>(read_uint(is, 2, what));
}
inline std::uint32_t read_u32(std::istream& is, const char* what) {
  return static_cast<std::uint32_t>(read_uint(is, 4, what));
}
inline double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(read_uint(is, 8, what));
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4)) throw FormatError("truncated file: missing magic bytes");
  if (std::string(buf, 4) != std::string(magic, 4)) {
    throw FormatError("bad magic bytes: expected \"" + std::string(magic, 4) + "\"");
  }
}

}  // namespace binary
}  // namespace hsinoise
