#pragma once

// JSON views of models, laws, detections, lattice fits and rankings.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

#include "redlab/background.hpp"
#include "redlab/denoise.hpp"
#include "redlab/detect.hpp"
#include "redlab/lattice.hpp"
#include "redlab/quadform.hpp"

namespace redlab::json {

using nlohmann::json;

inline constexpr int schema_version = 1;

/// JSON has no infinity; non-finite numbers become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// FNV-1a over the bytes of the values (for change detection, not security).
template <typename T, typename Tag>
std::string checksum(const Grid<T, Tag>& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int dims[2] = {g.width(), g.height()};
  mix(dims, sizeof dims);
  mix(g.values().data(), g.values().size_bytes());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json offset(Offset t) { return json::array({t.x, t.y}); }

inline json patch(const PatchDomain& omega) {
  json j{{"anchor", offset(omega.anchor())}, {"size", omega.size()}};
  if (omega.side()) j["side"] = *omega.side();
  return j;
}

inline json model(const MicrotextureModel& m) {
  return {{"kind", to_string(m.kind())},
          {"width", m.width()},
          {"height", m.height()},
          {"kernel_checksum", checksum(m.kernel())},
          {"degenerate", m.degenerate()}};
}

inline json law(const QuadFormLaw& l) { return {{"k1", l.k1}, {"k2", l.k2}, {"k3", l.k3}}; }

inline json params(const WoodFParams& w) {
  return {{"fallback", to_string(w.fallback)}, {"alpha1", w.alpha1}, {"alpha2", w.alpha2},
          {"beta", w.beta},                     {"shape", w.shape},   {"scale", w.scale}};
}

inline json fallbacks(const FallbackCounts& c) {
  return {{"none", c.none}, {"gamma-two-moment", c.gamma_two_moment}, {"point-mass", c.point_mass}};
}

inline json detection(const DetectionResult& r) {
  json j{{"status", to_string(r.status)},
         {"nfa_max", r.nfa_max},
         {"patch", patch(r.omega)},
         {"model", r.model},
         {"detections", r.count()},
         {"fallbacks", fallbacks(r.fallbacks)}};
  j["mask_stride"] = r.mask_stride ? json(*r.mask_stride) : json(nullptr);
  json offsets = json::array();
  for (int y = 0; y < r.detected.height(); ++y)
    for (int x = 0; x < r.detected.width(); ++x)
      if (r.detected(x, y)) offsets.push_back(offset(r.detected.centered({x, y})));
  j["detected_offsets"] = std::move(offsets);
  return j;
}

inline json vec(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

inline json fit(const LatticeFit& f) {
  json coeffs = json::array();
  for (const auto& c : f.coefficients) coeffs.push_back(json::array({c.m, c.n}));
  json q = json::array();
  for (double v : f.q_trajectory) q.push_back(number(v));
  json lp = json::array();
  for (double v : f.log_posterior) lp.push_back(number(v));
  return {{"b1", vec(f.basis.b1)},
          {"b2", vec(f.basis.b2)},
          {"determinant", f.determinant()},
          {"sigma2", f.sigma2},
          {"coefficients", coeffs},
          {"q_trajectory", q},
          {"log_posterior", lp},
          {"converged_at", f.converged_at ? json(*f.converged_at) : json(nullptr)},
          {"degenerate", f.degenerate}};
}

inline json graph(const DetectionGraph& g) {
  json v = json::array();
  for (Offset p : g.vertices) v.push_back(offset(p));
  json e = json::array();
  for (const auto& edge : g.edges) e.push_back({{"from", edge.from}, {"to", edge.to}, {"vector", vec(edge.vector)}});
  return {{"vertices", v}, {"edges", e}, {"components", g.components}};
}

inline json lattice(const LatticeResult& r) {
  json j{{"status", r.sufficient() ? "ok" : "insufficient detections"}, {"graph", graph(r.graph)}};
  if (r.fit) {
    j["fit"] = fit(*r.fit);
    j["c_per"] = number(r.c_per);
  }
  return j;
}

inline json ranking(const std::vector<TextureScore>& scores) {
  json out = json::array();
  int rank = 0;
  for (const auto& s : scores) {
    json j{{"name", s.name}, {"input_index", s.index}, {"successes", s.successes}, {"failures", s.failures}};
    if (s.median_c_per) {
      j["rank"] = ++rank;
      j["median_c_per"] = number(*s.median_c_per);
    } else {
      j["rank"] = nullptr;
      j["status"] = "unranked: no successful anchor";
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline json thresholds(const ThresholdTable& t) {
  json values = json::array();
  for (double v : t.values) values.push_back(number(v));
  return {{"c", t.c}, {"mean", number(t.mean)}, {"values", values}};
}

}  // namespace redlab::json
