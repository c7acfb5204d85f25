#pragma once

// Lattice extraction from detected offsets: one vertex per connected
// component, a 4-nearest-neighbour graph, and a MAP fit of a basis B and
// integer edge coordinates M by alternate minimization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "redlab/background.hpp"
#include "redlab/detect.hpp"
#include "redlab/error.hpp"
#include "redlab/grid.hpp"
#include "redlab/parallel.hpp"
#include "redlab/rng.hpp"

namespace redlab {

struct Edge {
  int from = 0;
  int to = 0;
  Eigen::Vector2d vector = Eigen::Vector2d::Zero();
};

struct DetectionGraph {
  std::vector<Offset> vertices;
  std::vector<Edge> edges;
  int components = 0;

  bool fit_ready() const { return vertices.size() >= 2 && !edges.empty(); }
};

namespace detail {

inline Eigen::Vector2d canonical(Eigen::Vector2d e) {
  if (e.x() < 0.0 || (e.x() == 0.0 && e.y() < 0.0)) e = -e;
  return e;
}

inline bool offset_less(Offset a, Offset b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

}  // namespace detail

/// Links each point to its (up to) k nearest neighbours, ties broken by
/// index; duplicate undirected edges are merged.
inline std::vector<Edge> nearest_neighbour_edges(const std::vector<Eigen::Vector2d>& points, std::size_t k = 4) {
  std::set<std::pair<int, int>> seen;
  std::vector<Edge> edges;
  const int n = static_cast<int>(points.size());
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back({(points[static_cast<std::size_t>(j)] - points[static_cast<std::size_t>(i)]).squaredNorm(), j});
    std::sort(order.begin(), order.end());
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
      const int lo = std::min(i, order[r].second);
      const int hi = std::max(i, order[r].second);
      if (!seen.insert({lo, hi}).second) continue;
      edges.push_back({lo, hi, detail::canonical(points[static_cast<std::size_t>(hi)] - points[static_cast<std::size_t>(lo)])});
    }
  }
  return edges;
}

inline std::vector<Edge> nearest_neighbour_edges(const std::vector<Offset>& points, std::size_t k = 4) {
  std::vector<Eigen::Vector2d> real;
  real.reserve(points.size());
  for (Offset o : points) real.emplace_back(o.x, o.y);
  return nearest_neighbour_edges(real, k);
}

/// Vertices at the AS argmin of each 8-connected component of the
/// detection map (on the torus), in centered coordinates; the component
/// holding t = 0 is dropped. Vertices are sorted by (x, y).
inline DetectionGraph build_graph(const BinaryMap& detected, const OffsetMap& similarity) {
  detail::require(detected.width() == similarity.width() && detected.height() == similarity.height(),
                  "detection and similarity maps differ in shape");
  const int w = detected.width();
  const int h = detected.height();
  std::vector<int> label(detected.size(), -1);
  DetectionGraph g;
  int next = 0;
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      if (!detected(x0, y0) || label[detected.index(x0, y0)] >= 0) continue;
      const int id = next++;
      bool has_origin = false;
      std::optional<Offset> best;
      double best_value = 0.0;
      std::queue<Offset> todo;
      todo.push({x0, y0});
      label[detected.index(x0, y0)] = id;
      while (!todo.empty()) {
        const Offset p = todo.front();
        todo.pop();
        if (p == Offset{}) has_origin = true;
        const Offset c = detected.centered(p);
        const double v = similarity[p];
        if (!best || v < best_value || (v == best_value && detail::offset_less(c, *best))) {
          best = c;
          best_value = v;
        }
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const Offset q = detected.raw({p.x + dx, p.y + dy});
            const std::size_t qi = detected.index(q.x, q.y);
            if (detected[q] && label[qi] < 0) {
              label[qi] = id;
              todo.push(q);
            }
          }
      }
      if (!has_origin) g.vertices.push_back(*best);
    }
  std::sort(g.vertices.begin(), g.vertices.end(), detail::offset_less);
  g.components = static_cast<int>(g.vertices.size());
  g.edges = nearest_neighbour_edges(g.vertices);
  return g;
}

struct Basis {
  Eigen::Vector2d b1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d b2 = Eigen::Vector2d::Zero();

  double determinant() const { return b1.x() * b2.y() - b1.y() * b2.x(); }
  friend bool operator==(const Basis& a, const Basis& b) { return a.b1 == b.b1 && a.b2 == b.b2; }
};

struct Coefficient {
  long long m = 0;
  long long n = 0;

  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

using Coefficients = std::vector<Coefficient>;
using EdgeVectors = std::vector<Eigen::Vector2d>;

inline EdgeVectors edge_vectors(const DetectionGraph& g) {
  EdgeVectors out;
  out.reserve(g.edges.size());
  for (const auto& e : g.edges) out.push_back(e.vector);
  return out;
}

/// q(B, M | E) = sum_e |m_e b1 + n_e b2 - e|^2 + dB |B|^2 + dM |M|^2.
inline double q_energy(const Basis& b, const Coefficients& m, const EdgeVectors& e, double delta_b, double delta_m) {
  detail::require(m.size() == e.size(), "one coefficient pair per edge is required");
  detail::require(delta_b >= 0.0 && delta_m >= 0.0, "regularization weights must be nonnegative");
  double q = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Eigen::Vector2d r =
        static_cast<double>(m[i].m) * b.b1 + static_cast<double>(m[i].n) * b.b2 - e[i];
    q += r.squaredNorm();
    q += delta_m * (static_cast<double>(m[i].m * m[i].m) + static_cast<double>(m[i].n * m[i].n));
  }
  return q + delta_b * (b.b1.squaredNorm() + b.b2.squaredNorm());
}

/// -2(|E| + 1) log sigma^2 - q / (2 sigma^2).
inline double log_posterior(double q, std::size_t n_edges, double sigma2) {
  return -2.0 * (static_cast<double>(n_edges) + 1.0) * std::log(sigma2) - q / (2.0 * sigma2);
}

struct CoefficientUpdate {
  EdgeVectors real;
  Coefficients rounded;
};

namespace detail {

inline Eigen::Matrix2d checked_inverse(const Eigen::Matrix2d& a, const char* what) {
  const double det = a.determinant();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (!(std::abs(det) > 1e-14 * scale * scale) || !std::isfinite(det)) throw NumericalError(what);
  return a.inverse();
}

}  // namespace detail

/// Real minimizer of q over M at fixed B, per edge
/// (Gram(B) + dM Id)^{-1} (<e, b1>, <e, b2>), then rounded half away
/// from zero.
inline CoefficientUpdate update_M(const Basis& b, const EdgeVectors& e, double delta_m) {
  Eigen::Matrix2d gram;
  gram << b.b1.squaredNorm() + delta_m, b.b1.dot(b.b2), b.b1.dot(b.b2), b.b2.squaredNorm() + delta_m;
  const Eigen::Matrix2d inv = detail::checked_inverse(gram, "singular basis in coefficient update");
  CoefficientUpdate u;
  u.real.reserve(e.size());
  u.rounded.reserve(e.size());
  for (const auto& v : e) {
    const Eigen::Vector2d mt = inv * Eigen::Vector2d(v.dot(b.b1), v.dot(b.b2));
    u.real.push_back(mt);
    u.rounded.push_back({std::llround(mt.x()), std::llround(mt.y())});
  }
  return u;
}

/// Real minimizer of q over B at fixed M:
/// (Gram(M) + dB Id)^{-1} (sum m_e e, sum n_e e).
inline Basis update_B(const Coefficients& m, const EdgeVectors& e, double delta_b) {
  detail::require(m.size() == e.size(), "one coefficient pair per edge is required");
  Eigen::Matrix2d gram = delta_b * Eigen::Matrix2d::Identity();
  Eigen::Vector2d sm = Eigen::Vector2d::Zero();
  Eigen::Vector2d sn = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double mi = static_cast<double>(m[i].m);
    const double ni = static_cast<double>(m[i].n);
    gram(0, 0) += mi * mi;
    gram(0, 1) += mi * ni;
    gram(1, 1) += ni * ni;
    sm += mi * e[i];
    sn += ni * e[i];
  }
  gram(1, 0) = gram(0, 1);
  const Eigen::Matrix2d inv = detail::checked_inverse(gram, "singular coefficient system in basis update");
  return {inv(0, 0) * sm + inv(0, 1) * sn, inv(1, 0) * sm + inv(1, 1) * sn};
}

enum class Init { median, random, given };

struct LatticeParams {
  double delta_b = 1e-2;
  double delta_m = 10.0;
  int iterations = 10;
  Init init = Init::median;
  std::uint64_t seed = 0;
  std::optional<Basis> initial_basis;
};

struct LatticeFit {
  Basis basis;
  Coefficients coefficients;
  double sigma2 = 0.0;
  std::vector<double> q_trajectory;
  std::vector<double> log_posterior;
  std::optional<int> converged_at;
  bool degenerate = false;

  double determinant() const { return basis.determinant(); }
};

/// (e, e rotated a quarter turn counterclockwise): a direct orthogonal basis.
inline Basis orthogonal_basis(const Eigen::Vector2d& e) { return {e, Eigen::Vector2d(-e.y(), e.x())}; }

/// Edge with median norm (lower median, ties by index).
inline std::size_t median_edge(const EdgeVectors& e) {
  std::vector<std::size_t> idx(e.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return e[a].squaredNorm() < e[b].squaredNorm(); });
  return idx[(idx.size() - 1) / 2];
}

/// Alternates the rounded coefficient update (kept only if it strictly
/// lowers q) with the exact basis update. Stops early once (B, M) repeats,
/// after which every further iteration would be identical.
inline LatticeFit alternate_minimization(const EdgeVectors& e, const LatticeParams& params) {
  detail::require(!e.empty(), "at least one edge is required");
  detail::require(params.iterations >= 1, "at least one iteration is required");
  detail::require(params.delta_b >= 0.0 && params.delta_m >= 0.0, "regularization weights must be nonnegative");

  LatticeFit fit;
  switch (params.init) {
    case Init::median: fit.basis = orthogonal_basis(e[median_edge(e)]); break;
    case Init::random: {
      Rng rng = make_rng(params.seed, 0);
      std::uniform_int_distribution<std::size_t> pick(0, e.size() - 1);
      fit.basis = orthogonal_basis(e[pick(rng)]);
      break;
    }
    case Init::given:
      detail::require(params.initial_basis.has_value(), "given init needs an initial basis");
      fit.basis = *params.initial_basis;
      break;
  }
  fit.coefficients.assign(e.size(), Coefficient{});

  const std::size_t ne = e.size();
  auto record = [&](double q) {
    fit.q_trajectory.push_back(q);
    const double s2 = q / (4.0 * (static_cast<double>(ne) + 1.0));
    fit.log_posterior.push_back(s2 > 0.0 ? log_posterior(q, ne, s2) : std::numeric_limits<double>::infinity());
  };
  double q = q_energy(fit.basis, fit.coefficients, e, params.delta_b, params.delta_m);
  record(q);

  for (int it = 0; it < params.iterations; ++it) {
    const Basis prev_basis = fit.basis;
    const Coefficients prev_m = fit.coefficients;
    const CoefficientUpdate cand = update_M(fit.basis, e, params.delta_m);
    if (q_energy(fit.basis, cand.rounded, e, params.delta_b, params.delta_m) < q) fit.coefficients = cand.rounded;
    fit.basis = update_B(fit.coefficients, e, params.delta_b);
    q = q_energy(fit.basis, fit.coefficients, e, params.delta_b, params.delta_m);
    record(q);
    if (fit.basis == prev_basis && fit.coefficients == prev_m) {
      fit.converged_at = it;
      break;
    }
  }
  fit.sigma2 = q / (4.0 * (static_cast<double>(ne) + 1.0));
  fit.degenerate = std::abs(fit.determinant()) < 1e-9 || fit.sigma2 == 0.0;
  return fit;
}

/// pi sigma^2 / (N_C |det B|); +inf for degenerate fits.
inline double c_per(const LatticeFit& fit, int components) {
  detail::require(components >= 1, "at least one component is required");
  if (fit.degenerate) return std::numeric_limits<double>::infinity();
  return std::numbers::pi * fit.sigma2 / (static_cast<double>(components) * std::abs(fit.determinant()));
}

struct LatticeResult {
  DetectionGraph graph;
  std::optional<LatticeFit> fit;
  double c_per = std::numeric_limits<double>::infinity();

  bool sufficient() const { return fit.has_value(); }
};

/// Graph and fit from a detection; no fit when the graph is too small.
inline LatticeResult extract_lattice(const DetectionResult& detection, const LatticeParams& params) {
  LatticeResult r{build_graph(detection.detected, detection.similarity), std::nullopt};
  if (!r.graph.fit_ready()) return r;
  r.fit = alternate_minimization(edge_vectors(r.graph), params);
  r.c_per = c_per(*r.fit, r.graph.components);
  return r;
}

struct RankParams {
  int anchors = 150;
  int p = 20;
  double nfa_max = 1.0;
  double delta_m = 10.0;
  double delta_b = 1e-2;
  int iterations = 10;
  std::uint64_t seed = 0;
  int threads = 0;
};

/// Exemplar model and detection thresholds of one texture; independent of
/// the anchors, so it can be reused across seeds.
struct PreparedTexture {
  Image image;
  OffsetMap thresholds;
};

inline PreparedTexture prepare_texture(const Image& u, const RankParams& params) {
  detail::require(u.width() >= params.p && u.height() >= params.p, "image is smaller than the ranking patch");
  detail::require(params.nfa_max > 0.0 && params.nfa_max < static_cast<double>(u.size()),
                  "ranking nfa_max must lie in (0, |Omega|)");
  const MicrotextureModel model = MicrotextureModel::from_exemplar(u);
  const PatchDomain omega = PatchDomain::square({0, 0}, params.p);
  const OffsetLaws laws = OffsetLaws::build(model, omega, nullptr, params.threads);
  OffsetMap thresholds = laws.thresholds(params.nfa_max / static_cast<double>(u.size()));
  // A point-mass law gives AP = 1 at AS = 0: never detected.
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x)
      if (laws.at({x, y}).fallback == Fallback::point_mass) thresholds(x, y) = -1.0;
  return {u, std::move(thresholds)};
}

struct TextureScore {
  std::size_t index = 0;
  std::string name;
  std::optional<double> median_c_per;
  int successes = 0;
  int failures = 0;
};

/// c_per values of the anchors of one texture (failed anchors omitted),
/// with the failure count. Anchor k is drawn from stream k of the seed, so
/// every texture is probed with the same draws.
inline std::pair<std::vector<double>, int> texture_c_per(const PreparedTexture& tex, const RankParams& params) {
  const int w = tex.image.width();
  const int h = tex.image.height();
  std::vector<std::optional<double>> per_anchor(static_cast<std::size_t>(params.anchors));
  LatticeParams lp;
  lp.delta_b = params.delta_b;
  lp.delta_m = params.delta_m;
  lp.iterations = params.iterations;

  parallel_for(per_anchor.size(), resolve_threads(params.threads), [&](std::size_t k) {
    Rng rng = make_rng(params.seed, k);
    std::uniform_int_distribution<int> ax(0, w - params.p);
    std::uniform_int_distribution<int> ay(0, h - params.p);
    const int x = ax(rng);
    const int y = ay(rng);
    const PatchDomain omega = PatchDomain::square({x, y}, params.p);
    const OffsetMap as = as_map(tex.image, omega);
    BinaryMap detected(w, h);
    for (std::size_t i = 0; i < as.size(); ++i)
      detected.values()[i] = as.values()[i] <= tex.thresholds.values()[i] ? 1 : 0;
    const DetectionGraph g = build_graph(detected, as);
    if (!g.fit_ready()) return;
    const LatticeFit fit = alternate_minimization(edge_vectors(g), lp);
    per_anchor[k] = c_per(fit, g.components);
  });

  std::vector<double> values;
  int failures = 0;
  for (const auto& v : per_anchor) {
    if (v) values.push_back(*v);
    else ++failures;
  }
  return {values, failures};
}

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Ascending median c_per (most periodic first); ties by input index,
/// unranked textures last.
inline std::vector<TextureScore> rank_prepared(const std::vector<PreparedTexture>& textures, const RankParams& params,
                                               const std::vector<std::string>& names = {}) {
  detail::require(params.anchors >= 1, "at least one anchor is required");
  std::vector<TextureScore> scores;
  for (std::size_t i = 0; i < textures.size(); ++i) {
    auto [values, failures] = texture_c_per(textures[i], params);
    TextureScore s;
    s.index = i;
    s.name = i < names.size() ? names[i] : std::to_string(i);
    s.successes = static_cast<int>(values.size());
    s.failures = failures;
    if (!values.empty()) s.median_c_per = median(std::move(values));
    scores.push_back(std::move(s));
  }
  std::stable_sort(scores.begin(), scores.end(), [](const TextureScore& a, const TextureScore& b) {
    if (a.median_c_per.has_value() != b.median_c_per.has_value()) return a.median_c_per.has_value();
    if (!a.median_c_per) return false;
    return *a.median_c_per < *b.median_c_per;
  });
  return scores;
}

inline std::vector<TextureScore> rank_textures(const std::vector<Image>& images, const RankParams& params,
                                               const std::vector<std::string>& names = {}) {
  std::vector<PreparedTexture> prepared;
  prepared.reserve(images.size());
  for (const auto& u : images) prepared.push_back(prepare_texture(u, params));
  return rank_prepared(prepared, params, names);
}

}  // namespace redlab
