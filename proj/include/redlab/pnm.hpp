#pragma once

// PGM (P2/P5, 8 and 16 bit), PBM (P4) and grayscale PFM (Pf) I/O.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "redlab/error.hpp"
#include "redlab/grid.hpp"

namespace redlab::pnm {

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline long long read_header_int(std::istream& in, const std::string& path) {
  skip_space_and_comments(in);
  long long v = 0;
  if (!(in >> v)) throw ValidationError(path + ": malformed header");
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path + ": cannot open");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path + ": cannot write");
  return out;
}

}  // namespace detail

/// Reads a PGM; pixel values are kept in their native range ([0, maxval]).
inline Image read_pgm(const std::string& path) {
  auto in = detail::open_in(path);
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) throw ValidationError(path + ": not a PGM file");
  const long long w = detail::read_header_int(in, path);
  const long long h = detail::read_header_int(in, path);
  const long long maxval = detail::read_header_int(in, path);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) throw ValidationError(path + ": bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw ValidationError(path + ": bad maxval");

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> values(n);
  if (magic[1] == '2') {
    for (auto& v : values) {
      const long long x = detail::read_header_int(in, path);
      if (x < 0 || x > maxval) throw ValidationError(path + ": pixel out of range");
      v = static_cast<double>(x);
    }
  } else {
    in.get();
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ValidationError(path + ": truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned x = bytes == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
      if (x > maxval) throw ValidationError(path + ": pixel out of range");
      values[i] = static_cast<double>(x);
    }
  }
  return Image(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

/// Writes a binary PGM, rounding and clamping to [0, maxval].
template <typename Tag>
void write_pgm(const std::string& path, const Grid<double, Tag>& g, int maxval = 255) {
  redlab::detail::require(maxval >= 1 && maxval <= 65535, "PGM maxval must lie in [1, 65535]");
  auto out = detail::open_out(path);
  out << "P5\n" << g.width() << ' ' << g.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(g.size() * (maxval < 256 ? 1 : 2));
  for (double v : g.values()) {
    const auto x = static_cast<unsigned>(std::clamp(std::round(v), 0.0, static_cast<double>(maxval)));
    if (maxval >= 256) raw.push_back(static_cast<unsigned char>(x >> 8));
    raw.push_back(static_cast<unsigned char>(x & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

/// Binary map as a 0/255 PGM.
inline void write_mask_pgm(const std::string& path, const BinaryMap& m) {
  Grid<double, OffsetTag> g(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) g.values()[i] = m.values()[i] ? 255.0 : 0.0;
  write_pgm(path, g);
}

/// Binary map as a raw PBM (1 = black).
inline void write_pbm(const std::string& path, const BinaryMap& m) {
  auto out = detail::open_out(path);
  out << "P4\n" << m.width() << ' ' << m.height() << '\n';
  const int row_bytes = (m.width() + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < m.height(); ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) row[static_cast<std::size_t>(x / 8)] |= static_cast<unsigned char>(0x80 >> (x % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

inline BinaryMap read_pbm(const std::string& path) {
  auto in = detail::open_in(path);
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '4') throw ValidationError(path + ": not a raw PBM file");
  const long long w = detail::read_header_int(in, path);
  const long long h = detail::read_header_int(in, path);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) throw ValidationError(path + ": bad dimensions");
  in.get();
  BinaryMap m(static_cast<int>(w), static_cast<int>(h));
  const auto row_bytes = static_cast<std::size_t>((w + 7) / 8);
  std::vector<unsigned char> row(row_bytes);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row_bytes));
    if (static_cast<std::size_t>(in.gcount()) != row_bytes) throw ValidationError(path + ": truncated pixel data");
    for (int x = 0; x < w; ++x) m(x, y) = (row[static_cast<std::size_t>(x / 8)] >> (7 - x % 8)) & 1;
  }
  return m;
}

/// Grayscale little-endian PFM. Rows are stored bottom to top.
template <typename Tag>
void write_pfm(const std::string& path, const Grid<double, Tag>& g) {
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
  auto out = detail::open_out(path);
  out << "Pf\n" << g.width() << ' ' << g.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(g.width()));
  for (int y = g.height() - 1; y >= 0; --y) {
    for (int x = 0; x < g.width(); ++x) row[static_cast<std::size_t>(x)] = static_cast<float>(g(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

template <typename Tag = ImageTag>
Grid<double, Tag> read_pfm(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "PFM reader assumes a little-endian host");
  auto in = detail::open_in(path);
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != 'f') throw ValidationError(path + ": not a grayscale PFM file");
  const long long w = detail::read_header_int(in, path);
  const long long h = detail::read_header_int(in, path);
  detail::skip_space_and_comments(in);
  double scale = 0.0;
  if (!(in >> scale) || scale == 0.0) throw ValidationError(path + ": bad scale");
  if (scale > 0.0) throw ValidationError(path + ": big-endian PFM is not supported");
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) throw ValidationError(path + ": bad dimensions");
  in.get();
  Grid<double, Tag> g(static_cast<int>(w), static_cast<int>(h));
  std::vector<float> row(static_cast<std::size_t>(w));
  for (long long y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != row.size() * sizeof(float))
      throw ValidationError(path + ": truncated pixel data");
    for (long long x = 0; x < w; ++x) {
      if (!std::isfinite(row[static_cast<std::size_t>(x)])) throw ValidationError(path + ": non-finite value");
      g(static_cast<int>(x), static_cast<int>(y)) = row[static_cast<std::size_t>(x)];
    }
  }
  return g;
}

}  // namespace redlab::pnm
