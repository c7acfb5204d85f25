#pragma once

// Threshold NL-means: for each patch, average the patches of the search
// window whose auto-similarity passes an a-contrario test against white
// noise; then average the patch estimates at each pixel. The classical
// exponential-weight variant shares the same machinery.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "redlab/background.hpp"
#include "redlab/error.hpp"
#include "redlab/grid.hpp"
#include "redlab/parallel.hpp"
#include "redlab/quadform.hpp"

namespace redlab {

enum class ThresholdMode { per_offset, constant_mean };

struct DenoiseConfig {
  double sigma = 10.0;
  int p = 8;
  int c = 10;
  double nfa_max = 4.41;
  ThresholdMode mode = ThresholdMode::constant_mean;
  int threads = 0;

  int window_size() const { return (2 * c + 1) * (2 * c + 1); }

  void validate() const {
    detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    detail::require(p >= 1, "patch side must be >= 1");
    detail::require(c >= 0, "search radius must be >= 0");
    detail::require(nfa_max >= 0.0 && nfa_max < static_cast<double>(window_size()),
                    "nfa_max must lie in [0, |T|)");
  }
};

/// a(t) for t in T = [-c, c]^2, stored row by row from (-c, -c).
struct ThresholdTable {
  int c = 0;
  std::vector<double> values;
  double mean = 0.0;

  double at(Offset t) const {
    const int side = 2 * c + 1;
    return values[static_cast<std::size_t>(t.y + c) * static_cast<std::size_t>(side) + static_cast<std::size_t>(t.x + c)];
  }
  double max() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (i != values.size() / 2) m = std::max(m, values[i]);
    return m;
  }
};

/// Unit white-noise thresholds a(t) = AP^{-1}(t, w, 1 - nfa_max / |T|) on a
/// p x p patch, with their mean over T \ {0}. nfa_max = 0 gives +inf.
inline ThresholdTable nlmeans_a_priori_threshold(int p, int c, double nfa_max) {
  detail::require(p >= 1 && c >= 0, "invalid patch side or search radius");
  const int side = 2 * c + 1;
  const double window = static_cast<double>(side) * static_cast<double>(side);
  detail::require(nfa_max >= 0.0 && nfa_max < window, "nfa_max must lie in [0, |T|)");
  ThresholdTable table;
  table.c = c;
  table.values.assign(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), 0.0);
  const double q = 1.0 - nfa_max / window;
  double sum = 0.0;
  for (int ty = -c; ty <= c; ++ty)
    for (int tx = -c; tx <= c; ++tx) {
      const std::size_t i =
          static_cast<std::size_t>(ty + c) * static_cast<std::size_t>(side) + static_cast<std::size_t>(tx + c);
      if (tx == 0 && ty == 0) continue;
      const std::size_t mirror = table.values.size() - 1 - i;
      if (mirror < i) {
        table.values[i] = table.values[mirror];
      } else {
        table.values[i] =
            q >= 1.0 ? std::numeric_limits<double>::infinity() : quantile(fit(white_noise_law(p, {tx, ty})), q);
      }
      sum += table.values[i];
    }
  table.mean = side > 1 ? sum / (window - 1.0) : 0.0;
  return table;
}

struct DenoiseReport {
  Image denoised;
  /// Number of selected offsets per patch anchor, (W-p+1) x (H-p+1).
  CountMap selected;
  std::optional<double> psnr;
  ThresholdTable thresholds;
};

namespace detail {

// Weight of offset t for the patch anchored at x, given AS(x, t).
using OffsetWeight = std::function<double(Offset t, double as)>;

// Runs the two-pass aggregation shared by both NL-means variants. Every
// sum is evaluated directly (no running sums) in a fixed order, so the
// result does not depend on how rows are split across threads.
inline Image nlmeans_aggregate(const Image& u, int p, int c, const OffsetWeight& weight, int threads,
                               CountMap* selected) {
  const int w = u.width();
  const int h = u.height();
  require(w >= p && h >= p, "image is smaller than the patch");
  const int aw = w - p + 1;
  const int ah = h - p + 1;
  const unsigned nthreads = resolve_threads(threads);

  std::vector<Offset> window;
  for (int ty = -c; ty <= c; ++ty)
    for (int tx = -c; tx <= c; ++tx) window.push_back({tx, ty});

  // AS(x, t) for all anchors x with x + t also an anchor; -1 marks invalid.
  auto distances = [&](Offset t, std::vector<double>& as) {
    std::vector<double> sq(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int xs = x + t.x;
        const int ys = y + t.y;
        if (xs < 0 || xs >= w || ys < 0 || ys >= h) continue;
        const double d = u(xs, ys) - u(x, y);
        sq[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = d * d;
      }
    std::vector<double> cols(static_cast<std::size_t>(w) * static_cast<std::size_t>(ah), 0.0);
    parallel_for(static_cast<std::size_t>(ah), nthreads, [&](std::size_t yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int k = 0; k < p; ++k) s += sq[static_cast<std::size_t>(y + k) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
        cols[yy * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = s;
      }
    });
    as.assign(static_cast<std::size_t>(aw) * static_cast<std::size_t>(ah), -1.0);
    parallel_for(static_cast<std::size_t>(ah), nthreads, [&](std::size_t yy) {
      const int y = static_cast<int>(yy);
      for (int x = 0; x < aw; ++x) {
        const int xs = x + t.x;
        const int ys = y + t.y;
        if (xs < 0 || xs >= aw || ys < 0 || ys >= ah) continue;
        double s = 0.0;
        for (int k = 0; k < p; ++k) s += cols[yy * static_cast<std::size_t>(w) + static_cast<std::size_t>(x + k)];
        as[yy * static_cast<std::size_t>(aw) + static_cast<std::size_t>(x)] = s;
      }
    });
  };

  const std::size_t n_anchors = static_cast<std::size_t>(aw) * static_cast<std::size_t>(ah);
  std::vector<double> normalizer(n_anchors, 0.0);
  std::vector<int> count(n_anchors, 0);
  std::vector<double> as;
  for (Offset t : window) {
    distances(t, as);
    for (std::size_t i = 0; i < n_anchors; ++i) {
      if (as[i] < 0.0) continue;
      const double wt = weight(t, as[i]);
      normalizer[i] += wt;
      if (wt > 0.0) ++count[i];
    }
  }
  for (double z : normalizer)
    if (!(z > 0.0)) throw NumericalError("patch with zero total weight");

  std::vector<double> numerator(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  std::vector<double> scaled(n_anchors);
  std::vector<double> rows(static_cast<std::size_t>(w) * static_cast<std::size_t>(ah));
  for (Offset t : window) {
    distances(t, as);
    for (std::size_t i = 0; i < n_anchors; ++i) scaled[i] = as[i] < 0.0 ? 0.0 : weight(t, as[i]) / normalizer[i];
    // S_t(z) = sum of scaled weights over anchors x with z in x + w.
    parallel_for(static_cast<std::size_t>(ah), nthreads, [&](std::size_t yy) {
      for (int z = 0; z < w; ++z) {
        double s = 0.0;
        for (int x = std::max(0, z - p + 1); x <= std::min(z, aw - 1); ++x) s += scaled[yy * static_cast<std::size_t>(aw) + static_cast<std::size_t>(x)];
        rows[yy * static_cast<std::size_t>(w) + static_cast<std::size_t>(z)] = s;
      }
    });
    parallel_for(static_cast<std::size_t>(h), nthreads, [&](std::size_t zz) {
      const int zy = static_cast<int>(zz);
      for (int zx = 0; zx < w; ++zx) {
        double s = 0.0;
        for (int y = std::max(0, zy - p + 1); y <= std::min(zy, ah - 1); ++y)
          s += rows[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(zx)];
        if (s == 0.0) continue;
        numerator[zz * static_cast<std::size_t>(w) + static_cast<std::size_t>(zx)] += s * u(zx + t.x, zy + t.y);
      }
    });
  }

  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int cy = std::min(y, ah - 1) - std::max(0, y - p + 1) + 1;
    for (int x = 0; x < w; ++x) {
      const int cx = std::min(x, aw - 1) - std::max(0, x - p + 1) + 1;
      out(x, y) = numerator[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] /
                  static_cast<double>(cx * cy);
    }
  }
  if (selected != nullptr) *selected = CountMap(aw, ah, std::move(count));
  return out;
}

}  // namespace detail

/// Threshold NL-means: offset t is kept for the patch at x when
/// AS(x, t) <= sigma^2 a(t); t = 0 is always kept.
inline DenoiseReport nlmeans_threshold(const Image& u, const DenoiseConfig& cfg) {
  cfg.validate();
  DenoiseReport report{Image(1, 1), CountMap(1, 1), std::nullopt,
                       nlmeans_a_priori_threshold(cfg.p, cfg.c, cfg.nfa_max)};
  const ThresholdTable& table = report.thresholds;
  const double s2 = cfg.sigma * cfg.sigma;
  const bool constant = cfg.mode == ThresholdMode::constant_mean;
  auto weight = [&](Offset t, double as) -> double {
    if (t == Offset{}) return 1.0;
    const double a = constant ? table.mean : table.at(t);
    return as <= s2 * a ? 1.0 : 0.0;
  };
  report.denoised = detail::nlmeans_aggregate(u, cfg.p, cfg.c, weight, cfg.threads, &report.selected);
  return report;
}

/// Classical NL-means: weights proportional to exp(-AS / h^2), normalized
/// over the search window.
inline DenoiseReport nlmeans_classic(const Image& u, const DenoiseConfig& cfg, double h) {
  detail::require(h > 0.0, "bandwidth h must be positive");
  detail::require(std::isfinite(cfg.sigma) && cfg.sigma > 0.0 && cfg.p >= 1 && cfg.c >= 0, "invalid configuration");
  DenoiseReport report{Image(1, 1), CountMap(1, 1), std::nullopt, ThresholdTable{}};
  const double h2 = h * h;
  auto weight = [&](Offset, double as) -> double { return std::isinf(h2) ? 1.0 : std::exp(-as / h2); };
  report.denoised = detail::nlmeans_aggregate(u, cfg.p, cfg.c, weight, cfg.threads, &report.selected);
  return report;
}

/// 10 log10(max u^2 / MSE(u, v)); +inf when v == u.
inline double psnr(const Image& reference, const Image& v) {
  detail::require(reference.width() == v.width() && reference.height() == v.height(), "psnr: shape mismatch");
  double peak = 0.0;
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference.values()[i];
    peak = std::max(peak, r * r);
    const double d = r - v.values()[i];
    se += d * d;
  }
  detail::require(peak > 0.0, "psnr: reference image is zero");
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak / (se / static_cast<double>(reference.size())));
}

/// sigma (sqrt(a_T) + sqrt(a_W)): a_T the largest window threshold, a_W the
/// chi-square(|w|) quantile at 1 - eps.
inline double reconstruction_bound(const DenoiseConfig& cfg, double eps) {
  cfg.validate();
  detail::require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  const ThresholdTable table = nlmeans_a_priori_threshold(cfg.p, cfg.c, cfg.nfa_max);
  const double a_t = table.max();
  const double dof = static_cast<double>(cfg.p) * static_cast<double>(cfg.p);
  const double a_w = 2.0 * boost::math::gamma_p_inv(dof / 2.0, 1.0 - eps);
  return cfg.sigma * (std::sqrt(a_t) + std::sqrt(a_w));
}

}  // namespace redlab
