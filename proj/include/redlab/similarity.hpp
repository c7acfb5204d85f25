#pragma once

// FFT evaluation of whole auto-similarity maps and autocorrelations.

#include <algorithm>
#include <cmath>

#include "redlab/fft.hpp"
#include "redlab/grid.hpp"

namespace redlab {

/// Gamma_f(z) = sum_y f(y) f(y - z) on the torus, symmetrized so that
/// Gamma(z) == Gamma(-z) holds exactly.
inline OffsetMap autocorrelation(const Image& f) {
  OffsetMap g = fft::correlate(f, f);
  OffsetMap out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) out(x, y) = 0.5 * (g(x, y) + g.periodic(-x, -y));
  return out;
}

/// AS(u, t, w) for every t in the grid.
///
/// Square domains use the expansion
///   AS(t) = sum_w u(x+t)^2 - 2 sum_w u(x) u(x+t) + sum_w u(x)^2
/// where both t-dependent sums are periodic correlations against the
/// (wrapped) indicator of w. Values below 1e-9 |u|^2 are clamped to zero so
/// that exact repeats read as exact zeros. Other domains fall back to the
/// direct loop.
inline OffsetMap as_map(const Image& u, const PatchDomain& omega) {
  if (!omega.is_square()) return as_map_direct(u, omega);

  Image weight(u.width(), u.height());
  for (Offset p : omega.points()) weight[u.raw(p)] += 1.0;

  Image squared(u.width(), u.height());
  Image weighted(u.width(), u.height());
  double self = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = u.values()[i];
    squared.values()[i] = v * v;
    weighted.values()[i] = weight.values()[i] * v;
    self += weight.values()[i] * v * v;
  }

  const OffsetMap shifted_energy = fft::correlate(weight, squared);
  const OffsetMap cross = fft::correlate(weighted, u);
  const double floor = 1e-9 * sum_of_squares(u.values());

  OffsetMap out(u.width(), u.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = shifted_energy.values()[i] - 2.0 * cross.values()[i] + self;
    out.values()[i] = v < floor ? 0.0 : v;
  }
  out(0, 0) = 0.0;
  return out;
}

}  // namespace redlab
