#pragma once

// CDF and quantiles of nonnegative Gaussian quadratic forms by a
// three-moment beta-prime (scaled Fisher-Snedecor) fit.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "redlab/background.hpp"
#include "redlab/error.hpp"
#include "redlab/rng.hpp"

namespace redlab {

enum class Fallback { none, gamma_two_moment, point_mass };

inline std::string to_string(Fallback f) {
  switch (f) {
    case Fallback::none: return "none";
    case Fallback::gamma_two_moment: return "gamma-two-moment";
    case Fallback::point_mass: return "point-mass";
  }
  return "unknown";
}

/// beta * X with X ~ BetaPrime(alpha1, alpha2), or a fallback law. The
/// gamma fallback is scale * chi-square(shape), i.e. Gamma(shape / 2, 2 scale).
struct WoodFParams {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double beta = 0.0;
  double shape = 0.0;
  double scale = 0.0;
  Fallback fallback = Fallback::point_mass;
};

namespace detail {

// Above this, BetaPrime(a1, a2) scaled to the target mean is a gamma law up
// to terms of order 1/a2, and a2 itself is dominated by cancellation.
inline constexpr double max_alpha2 = 1e8;

inline WoodFParams gamma_fit(double k1, double k2) {
  WoodFParams w;
  if (k2 <= 0.0) return w;
  w.fallback = Fallback::gamma_two_moment;
  w.shape = 2.0 * k1 * k1 / k2;
  w.scale = k2 / (2.0 * k1);
  return w;
}

}  // namespace detail

/// Matches the first three raw moments of the law. Falls back to a
/// two-moment gamma fit when no admissible beta-prime exists.
inline WoodFParams fit(const QuadFormLaw& law) {
  constexpr double tol = -1e-10;
  if (law.k1 < tol || law.k2 < tol || law.k3 < tol) throw ValidationError("negative cumulant");
  const double k1 = std::max(0.0, law.k1);
  const double k2 = std::max(0.0, law.k2);
  const double k3 = std::max(0.0, law.k3);
  if (k1 == 0.0 || k2 == 0.0) return {};

  const double m1 = k1;
  const double m2 = k2 + k1 * k1;
  const double m3 = k3 + 3.0 * k1 * k2 + k1 * k1 * k1;
  const double r1 = m2 / (m1 * m1);
  const double r2 = m3 * m1 / (m2 * m2);
  const double den1 = r1 * r2 - 2.0 * r2 + 1.0;
  const double den2 = r1 * r2 - 2.0 * r1 + 1.0;
  const double a1 = 2.0 * (r2 - 1.0) / den1;
  const double a2 = (3.0 * r1 * r2 - 4.0 * r1 + 1.0) / den2;
  if (!(den1 > 0.0 && den2 > 0.0 && std::isfinite(a1) && std::isfinite(a2) && a1 > 0.0 && a2 > 3.0 &&
        a2 < detail::max_alpha2))
    return detail::gamma_fit(k1, k2);

  WoodFParams w;
  w.fallback = Fallback::none;
  w.alpha1 = a1;
  w.alpha2 = a2;
  w.beta = m1 * (a2 - 1.0) / a1;
  return w;
}

inline double cdf(const WoodFParams& w, double x) {
  switch (w.fallback) {
    case Fallback::point_mass: return x >= 0.0 ? 1.0 : 0.0;
    case Fallback::gamma_two_moment:
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return boost::math::gamma_p(w.shape / 2.0, x / (2.0 * w.scale));
    case Fallback::none: break;
  }
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double y = x / w.beta;
  return boost::math::ibeta(w.alpha1, w.alpha2, y / (1.0 + y));
}

/// inf{x : cdf(x) >= q}, bracketed then bisected to 1e-10 relative width.
inline double quantile(const WoodFParams& w, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must lie in (0, 1)");
  if (w.fallback == Fallback::point_mass) return 0.0;

  const double mean = w.fallback == Fallback::none ? w.beta * w.alpha1 / (w.alpha2 - 1.0) : w.shape * w.scale;
  double hi = mean > 0.0 ? mean : 1.0;
  int guard = 0;
  while (cdf(w, hi) < q) {
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) throw NumericalError("quantile: cannot bracket from above");
  }
  double lo = hi / 2.0;
  while (cdf(w, lo) >= q) {
    hi = lo;
    lo /= 2.0;
    if (++guard > 4000 || lo == 0.0) return hi;
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf(w, mid) >= q ? hi : lo) = mid;
  }
  return hi;
}

/// Fraction of seeded draws of sum lambda_k z_k^2 that are <= x, for each x.
inline std::vector<double> mc_cdf(std::span<const Eigenvalue> eigenvalues, std::span<const double> xs,
                                  std::size_t n_samples, std::uint64_t seed) {
  detail::require(n_samples >= 1, "mc_cdf needs at least one sample");
  const std::vector<double> lambdas = expand(eigenvalues);
  std::vector<std::size_t> hits(xs.size(), 0);
  NormalSource normal(seed);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double v = 0.0;
    for (double l : lambdas) {
      const double z = normal();
      v += l * z * z;
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (v <= xs[i]) ++hits[i];
  }
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = static_cast<double>(hits[i]) / static_cast<double>(n_samples);
  return out;
}

inline double mc_cdf(std::span<const Eigenvalue> eigenvalues, double x, std::size_t n_samples, std::uint64_t seed) {
  const double xs[1] = {x};
  return mc_cdf(eigenvalues, xs, n_samples, seed).front();
}

}  // namespace redlab
