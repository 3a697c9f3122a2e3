#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "lowrank/errors.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

// Binary matrix file format "LRM1":
//   magic bytes 'L' 'R' 'M' '1'
//   u32 rows, u32 cols        (little endian, both positive)
//   rows*cols f64 entries     (little endian, row-major)
// Readers reject wrong magic, zero dimensions, truncation, trailing bytes,
// and non-finite entries.

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64_le(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32_le(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("lrm: truncated ") + what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64_le(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw FormatError("lrm: truncated payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

inline void write_lrm(std::ostream& os, const Matrix& m) {
  require_nonempty(m, "write_lrm");
  require_finite(m, "write_lrm");
  require_arg(m.rows() <= std::numeric_limits<std::uint32_t>::max() &&
                  m.cols() <= std::numeric_limits<std::uint32_t>::max(),
              "write_lrm: dimensions exceed format limits");
  os.write("LRM1", 4);
  detail::put_u32_le(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32_le(os, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) detail::put_f64_le(os, m(i, j));
  if (!os) throw FormatError("lrm: write failed");
}

inline Matrix read_lrm(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("lrm: truncated header");
  if (std::memcmp(magic, "LRM1", 4) != 0)
    throw FormatError("lrm: wrong magic bytes");
  const std::uint32_t rows = detail::get_u32_le(is, "row count");
  const std::uint32_t cols = detail::get_u32_le(is, "column count");
  if (rows == 0 || cols == 0) throw FormatError("lrm: zero dimension");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = detail::get_f64_le(is);
  if (is.peek() != std::istream::traits_type::eof())
    throw FormatError("lrm: trailing bytes after payload");
  if (!m.allFinite()) throw FormatError("lrm: non-finite entries");
  return m;
}

inline void write_lrm(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("lrm: cannot open for writing: " + path.string());
  write_lrm(os, m);
}

inline Matrix read_lrm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("lrm: cannot open: " + path.string());
  return read_lrm(is);
}

}  // namespace lowrank
