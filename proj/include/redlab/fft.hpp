#pragma once

// Periodic 2-D correlation and convolution through FFTW (double precision).

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <cstddef>
#include <memory>
#include <mutex>

#include "redlab/grid.hpp"

namespace redlab::fft {

namespace detail {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using Buffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
Buffer<T> allocate(std::size_t n) {
  return Buffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

/// Half-spectrum of a real W x H field.
class Spectrum {
 public:
  Spectrum(int width, int height)
      : width_(width), height_(height), bins_(static_cast<std::size_t>(height) * (width / 2 + 1)),
        data_(allocate<fftw_complex>(bins_)) {}

  template <typename Tag>
  static Spectrum forward(const Grid<double, Tag>& g) {
    Spectrum s(g.width(), g.height());
    auto in = allocate<double>(g.size());
    std::copy(g.values().begin(), g.values().end(), in.get());
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_r2c_2d(g.height(), g.width(), in.get(), s.data_.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    return s;
  }

  /// Inverse transform normalized so that inverse(forward(g)) == g.
  template <typename Tag>
  Grid<double, Tag> inverse() const {
    const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    auto work = allocate<fftw_complex>(bins_);
    std::memcpy(work.get(), data_.get(), sizeof(fftw_complex) * bins_);
    auto out = allocate<double>(n);
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_c2r_2d(height_, width_, work.get(), out.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = out[i] * scale;
    return Grid<double, Tag>(width_, height_, std::move(values));
  }

  std::complex<double> operator[](std::size_t i) const { return {data_[i][0], data_[i][1]}; }
  void set(std::size_t i, std::complex<double> v) {
    data_[i][0] = v.real();
    data_[i][1] = v.imag();
  }
  std::size_t bins() const { return bins_; }

 private:
  int width_;
  int height_;
  std::size_t bins_;
  Buffer<fftw_complex> data_;
};

}  // namespace detail

/// c(t) = sum_y a(y) b(y + t) on the torus.
template <typename TagA, typename TagB>
OffsetMap correlate(const Grid<double, TagA>& a, const Grid<double, TagB>& b) {
  redlab::detail::require(a.width() == b.width() && a.height() == b.height(), "correlate: shape mismatch");
  const auto fa = detail::Spectrum::forward(a);
  auto fb = detail::Spectrum::forward(b);
  for (std::size_t i = 0; i < fb.bins(); ++i) fb.set(i, std::conj(fa[i]) * fb[i]);
  return fb.template inverse<OffsetTag>();
}

/// (f * w)(x) = sum_y f(y) w(x - y) on the torus.
inline Image convolve(const Image& f, const Image& w) {
  redlab::detail::require(f.width() == w.width() && f.height() == w.height(), "convolve: shape mismatch");
  const auto ff = detail::Spectrum::forward(f);
  auto fw = detail::Spectrum::forward(w);
  for (std::size_t i = 0; i < fw.bins(); ++i) fw.set(i, ff[i] * fw[i]);
  return fw.inverse<ImageTag>();
}

}  // namespace redlab::fft
