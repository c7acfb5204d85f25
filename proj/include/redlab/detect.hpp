#pragma once

// A-contrario offset detection: per-offset probabilities AP(t) of the
// observed auto-similarity under a background model, thresholded at
// nfa_max / |Omega|.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "redlab/background.hpp"
#include "redlab/error.hpp"
#include "redlab/grid.hpp"
#include "redlab/parallel.hpp"
#include "redlab/quadform.hpp"
#include "redlab/similarity.hpp"

namespace redlab {

/// P0[AS(U, t, w) <= value].
inline double ap(const MicrotextureModel& model, Offset t, const PatchDomain& omega, double value) {
  detail::require(value >= 0.0, "auto-similarity value must be nonnegative");
  return cdf(fit(cumulants(model, t, omega)), value);
}

/// a(t) = AP^{-1}(t, w, q).
inline double threshold_a(const MicrotextureModel& model, Offset t, const PatchDomain& omega, double q) {
  detail::require(q > 0.0 && q < 1.0, "threshold level must lie in (0, 1)");
  return quantile(fit(cumulants(model, t, omega)), q);
}

struct FallbackCounts {
  std::size_t none = 0;
  std::size_t gamma_two_moment = 0;
  std::size_t point_mass = 0;

  void add(Fallback f) {
    switch (f) {
      case Fallback::none: ++none; break;
      case Fallback::gamma_two_moment: ++gamma_two_moment; break;
      case Fallback::point_mass: ++point_mass; break;
    }
  }
};

/// Offsets whose centered coordinates are both multiples of `stride`.
inline BinaryMap stride_mask(int width, int height, int stride) {
  detail::require(stride >= 1, "mask stride must be >= 1");
  BinaryMap m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Offset c = m.centered({x, y});
      m(x, y) = (c.x % stride == 0 && c.y % stride == 0) ? 1 : 0;
    }
  return m;
}

/// Fitted AS laws for every offset of a grid, for one model and one patch
/// shape. The law only depends on the shape of w (not its anchor) and is
/// even in t, so each +-t pair is fitted once.
class OffsetLaws {
 public:
  static OffsetLaws build(const MicrotextureModel& model, const PatchDomain& omega, const BinaryMap* mask = nullptr,
                          int threads = 0) {
    const int w = model.width();
    const int h = model.height();
    if (mask != nullptr) detail::require(mask->width() == w && mask->height() == h, "mask shape mismatch");
    OffsetLaws laws(w, h);
    const BinaryMap shape(w, h);

    std::vector<std::size_t> todo;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = shape.index(x, y);
        const Offset neg = shape.raw({-x, -y});
        const std::size_t j = shape.index(neg.x, neg.y);
        const bool wanted = mask == nullptr || (*mask)(x, y) != 0 || (*mask)(neg.x, neg.y) != 0;
        if (wanted && i <= j) todo.push_back(i);
      }

    parallel_for(todo.size(), resolve_threads(threads), [&](std::size_t k) {
      const std::size_t i = todo[k];
      const Offset t{static_cast<int>(i % static_cast<std::size_t>(w)), static_cast<int>(i / static_cast<std::size_t>(w))};
      laws.params_[i] = fit(cumulants(model, t, omega));
    });

    for (std::size_t i : todo) {
      const Offset t{static_cast<int>(i % static_cast<std::size_t>(w)), static_cast<int>(i / static_cast<std::size_t>(w))};
      const Offset neg = shape.raw(-t);
      const std::size_t j = shape.index(neg.x, neg.y);
      laws.params_[j] = laws.params_[i];
      const bool keep_i = mask == nullptr || (*mask)(t.x, t.y) != 0;
      const bool keep_j = mask == nullptr || (*mask)(neg.x, neg.y) != 0;
      laws.evaluated_[i] = keep_i ? 1 : 0;
      laws.evaluated_[j] = keep_j ? 1 : 0;
    }
    for (std::size_t i = 0; i < laws.params_.size(); ++i)
      if (laws.evaluated_[i]) laws.fallbacks_.add(laws.params_[i].fallback);
    return laws;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return params_.size(); }
  bool evaluated(Offset raw) const { return evaluated_[index(raw)] != 0; }
  const WoodFParams& at(Offset raw) const { return params_[index(raw)]; }
  const FallbackCounts& fallbacks() const { return fallbacks_; }

  /// a(t) at level q; masked offsets get 0.
  OffsetMap thresholds(double q) const {
    detail::require(q > 0.0 && q < 1.0, "threshold level must lie in (0, 1)");
    OffsetMap out(width_, height_);
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (evaluated_[i]) out.values()[i] = quantile(params_[i], q);
    return out;
  }

 private:
  OffsetLaws(int width, int height)
      : width_(width), height_(height), params_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)),
        evaluated_(params_.size(), 0) {}

  std::size_t index(Offset raw) const {
    return static_cast<std::size_t>(raw.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(raw.x);
  }

  int width_;
  int height_;
  std::vector<WoodFParams> params_;
  std::vector<std::uint8_t> evaluated_;
  FallbackCounts fallbacks_;
};

enum class DetectionStatus { ok, trivial_all_detected };

inline std::string to_string(DetectionStatus s) {
  return s == DetectionStatus::ok ? "ok" : "trivial-all-detected";
}

struct DetectionResult {
  OffsetMap probability;
  BinaryMap detected;
  OffsetMap similarity;
  double nfa_max = 0.0;
  PatchDomain omega;
  std::string model;
  FallbackCounts fallbacks;
  DetectionStatus status = DetectionStatus::ok;
  std::optional<int> mask_stride;

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : detected.values()) n += v;
    return n;
  }
};

/// Detection with precomputed laws (the laws must match u's grid and w's
/// shape).
inline DetectionResult autosim_detection(const Image& u, const PatchDomain& omega, const OffsetLaws& laws,
                                         double nfa_max, std::string model_name = {}) {
  detail::require(nfa_max >= 0.0, "nfa_max must be nonnegative");
  detail::require(laws.width() == u.width() && laws.height() == u.height(), "offset laws do not match the image");
  const double level = nfa_max / static_cast<double>(u.size());
  DetectionResult r{OffsetMap(u.width(), u.height(), 1.0), BinaryMap(u.width(), u.height()), as_map(u, omega),
                    nfa_max, omega, std::move(model_name), laws.fallbacks()};
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x) {
      if (!laws.evaluated({x, y})) continue;
      const double p = cdf(laws.at({x, y}), r.similarity(x, y));
      r.probability(x, y) = p;
      r.detected(x, y) = p <= level ? 1 : 0;
    }
  if (level >= 1.0) r.status = DetectionStatus::trivial_all_detected;
  return r;
}

/// Algorithm entry point: fits every offset law then thresholds.
inline DetectionResult autosim_detection(const Image& u, const PatchDomain& omega, const MicrotextureModel& model,
                                         double nfa_max, const BinaryMap* mask = nullptr, int threads = 0) {
  detail::require(model.width() == u.width() && model.height() == u.height(), "model does not match the image");
  detail::require(nfa_max >= 0.0, "nfa_max must be nonnegative");
  const OffsetLaws laws = OffsetLaws::build(model, omega, mask, threads);
  return autosim_detection(u, omega, laws, nfa_max, to_string(model.kind()));
}

}  // namespace redlab
