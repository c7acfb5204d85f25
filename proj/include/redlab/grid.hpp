#pragma once

// Images and offset maps on a periodic rectangular grid, patch domains,
// and the direct (loop based) patch primitives.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "redlab/error.hpp"

namespace redlab {

/// Integer 2-vector: a pixel coordinate or a translation.
struct Offset {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Offset&, const Offset&) = default;
  friend constexpr Offset operator+(Offset a, Offset b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Offset operator-(Offset a, Offset b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Offset operator-(Offset a) { return {-a.x, -a.y}; }
};

/// Non-negative remainder of v modulo n (n > 0).
constexpr int wrap(int v, int n) {
  const int r = v % n;
  return r < 0 ? r + n : r;
}

/// Representative of v mod n in [-n/2, n/2).
constexpr int center(int v, int n) {
  const int r = wrap(v, n);
  return r < (n + 1) / 2 ? r : r - n;
}

struct ImageTag {};
struct OffsetTag {};

/// Row-major W x H array with periodic read access. The tag separates
/// images (indexed by pixel) from maps indexed by offset.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    detail::require(width > 0 && height > 0, "grid dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> values) : width_(width), height_(height), data_(std::move(values)) {
    detail::require(width > 0 && height > 0, "grid dimensions must be positive");
    detail::require(data_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                    "grid value count does not match dimensions");
    if constexpr (std::is_floating_point_v<T>) {
      detail::require(std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); }),
                      "grid values must be finite");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](Offset p) { return (*this)(p.x, p.y); }
  const T& operator[](Offset p) const { return (*this)(p.x, p.y); }

  /// Value of the periodic extension at any integer coordinate.
  const T& periodic(int x, int y) const { return data_[index(wrap(x, width_), wrap(y, height_))]; }
  const T& periodic(Offset p) const { return periodic(p.x, p.y); }

  /// Raw coordinate in [0,W) x [0,H) of an arbitrary integer coordinate.
  Offset raw(Offset p) const { return {wrap(p.x, width_), wrap(p.y, height_)}; }
  /// Centered representative in [-W/2, W/2) x [-H/2, H/2).
  Offset centered(Offset p) const { return {center(p.x, width_), center(p.y, height_)}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double, ImageTag>;
using OffsetMap = Grid<double, OffsetTag>;
using BinaryMap = Grid<std::uint8_t, OffsetTag>;
using CountMap = Grid<int, ImageTag>;

template <typename Tag>
Grid<double, Tag> same_shape(const Image& like, double fill = 0.0) {
  return Grid<double, Tag>(like.width(), like.height(), fill);
}

/// A finite set of grid coordinates in canonical raster order (y, then x).
class PatchDomain {
 public:
  static PatchDomain square(Offset anchor, int side) {
    detail::require(side >= 1, "patch side must be >= 1");
    PatchDomain d;
    d.anchor_ = anchor;
    d.side_ = side;
    d.points_.reserve(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) d.points_.push_back({anchor.x + x, anchor.y + y});
    return d;
  }

  static PatchDomain from_points(std::vector<Offset> points) {
    detail::require(!points.empty(), "patch domain must not be empty");
    std::sort(points.begin(), points.end(), raster_less);
    detail::require(std::adjacent_find(points.begin(), points.end()) == points.end(),
                    "patch domain coordinates must be distinct");
    PatchDomain d;
    d.anchor_ = points.front();
    d.points_ = std::move(points);
    return d;
  }

  Offset anchor() const { return anchor_; }
  std::optional<int> side() const { return side_; }
  bool is_square() const { return side_.has_value(); }
  std::size_t size() const { return points_.size(); }
  std::span<const Offset> points() const { return points_; }

  /// Same shape moved to a new anchor.
  PatchDomain moved_to(Offset anchor) const {
    PatchDomain d = *this;
    const Offset shift = anchor - anchor_;
    for (auto& p : d.points_) p = p + shift;
    d.anchor_ = anchor;
    return d;
  }

  static bool raster_less(Offset a, Offset b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

 private:
  PatchDomain() = default;

  Offset anchor_{};
  std::optional<int> side_;
  std::vector<Offset> points_;
};

/// Patch P_w(u): the periodic extension of u read on w in raster order.
inline std::vector<double> extract_patch(const Image& u, const PatchDomain& omega) {
  std::vector<double> out;
  out.reserve(omega.size());
  for (Offset p : omega.points()) out.push_back(u.periodic(p));
  return out;
}

/// Squared l2 distance between the patch at w and the patch at t + w.
inline double auto_similarity(const Image& u, Offset t, const PatchDomain& omega) {
  double acc = 0.0;
  for (Offset p : omega.points()) {
    const double d = u.periodic(p + t) - u.periodic(p);
    acc += d * d;
  }
  return acc;
}

/// Loop evaluation of every offset of the grid. O(|Omega| |w|).
inline OffsetMap as_map_direct(const Image& u, const PatchDomain& omega) {
  OffsetMap out(u.width(), u.height());
  for (int ty = 0; ty < u.height(); ++ty)
    for (int tx = 0; tx < u.width(); ++tx) out(tx, ty) = auto_similarity(u, {tx, ty}, omega);
  return out;
}

/// omega-inertia of a quantized image: co-occurrence counts of gray-level
/// pairs (u(z), u(z+t)) over z in w, weighted by (i-j)^2.
inline double inertia(const Image& u, Offset t, const PatchDomain& omega, int levels) {
  detail::require(levels >= 0, "number of gray levels must be non-negative");
  auto level_of = [&](double v) {
    const double r = std::round(v);
    detail::require(r == v && r >= 0.0 && r <= static_cast<double>(levels),
                    "inertia requires integer pixels in [0, N_g]");
    return static_cast<long long>(r);
  };
  std::map<std::pair<long long, long long>, long long> cooccurrence;
  for (Offset z : omega.points()) ++cooccurrence[{level_of(u.periodic(z)), level_of(u.periodic(z + t))}];
  long long acc = 0;
  for (const auto& [ij, count] : cooccurrence) {
    const long long d = ij.first - ij.second;
    acc += d * d * count;
  }
  return static_cast<double>(acc);
}

/// Four-neighbour periodic Laplacian scaled by 1/4.
inline Image laplacian(const Image& u) {
  Image out(u.width(), u.height());
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x)
      out(x, y) = (u.periodic(x + 1, y) + u.periodic(x - 1, y) + u.periodic(x, y + 1) + u.periodic(x, y - 1) -
                   4.0 * u(x, y)) /
                  4.0;
  return out;
}

inline double sum_of_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace redlab
