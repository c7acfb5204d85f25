#pragma once

// Gaussian microtexture background models U = f * W, the offset correlation
// Delta_f, per-offset covariance matrices C_t and the cumulants of the law
// of AS(U, t, w), which is a weighted sum of chi-square(1) variables.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "redlab/error.hpp"
#include "redlab/fft.hpp"
#include "redlab/grid.hpp"
#include "redlab/rng.hpp"
#include "redlab/similarity.hpp"

namespace redlab {

enum class ModelKind { white_noise, exemplar };

inline std::string to_string(ModelKind k) { return k == ModelKind::white_noise ? "white-noise" : "exemplar"; }

/// Stationary Gaussian field U = f * W on the torus, with W standard white
/// noise. Immutable once built; Gamma_f is cached.
class MicrotextureModel {
 public:
  static MicrotextureModel white_noise(int width, int height) {
    Image f(width, height);
    f(0, 0) = 1.0;
    OffsetMap gamma(width, height);
    gamma(0, 0) = 1.0;
    return MicrotextureModel(ModelKind::white_noise, std::move(f), std::move(gamma));
  }

  /// f = |Omega|^{-1/2} (u - mean(u)). A constant exemplar gives f == 0.
  static MicrotextureModel from_exemplar(const Image& u) {
    const auto v = u.values();
    Image f(u.width(), u.height());
    const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    if (!constant) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      const double norm = 1.0 / std::sqrt(static_cast<double>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) f.values()[i] = norm * (v[i] - mean);
    }
    return from_kernel(std::move(f), ModelKind::exemplar);
  }

  static MicrotextureModel from_kernel(Image f, ModelKind kind) {
    OffsetMap gamma = autocorrelation(f);
    const auto fv = f.values();
    if (std::all_of(fv.begin(), fv.end(), [](double x) { return x == 0.0; }))
      gamma = OffsetMap(f.width(), f.height());
    return MicrotextureModel(kind, std::move(f), std::move(gamma));
  }

  ModelKind kind() const { return kind_; }
  const Image& kernel() const { return kernel_; }
  const OffsetMap& gamma() const { return gamma_; }
  int width() const { return kernel_.width(); }
  int height() const { return kernel_.height(); }
  /// The zero field: every AS law is the point mass at 0.
  bool degenerate() const { return gamma_(0, 0) == 0.0; }
  double gamma_at(Offset z) const { return gamma_.periodic(z); }

  /// Delta_f(t, x) = 2 Gamma(x) - Gamma(x + t) - Gamma(x - t).
  double delta(Offset t, Offset x) const { return 2.0 * gamma_at(x) - gamma_at(x + t) - gamma_at(x - t); }

 private:
  MicrotextureModel(ModelKind kind, Image f, OffsetMap gamma)
      : kind_(kind), kernel_(std::move(f)), gamma_(std::move(gamma)) {}

  ModelKind kind_;
  Image kernel_;
  OffsetMap gamma_;
};

/// x -> Delta_f(t, x) over the whole grid. The value at x = 0 is a
/// variance and is clamped at zero after a -1e-10 round-off check.
inline OffsetMap delta_f(const MicrotextureModel& model, Offset t) {
  OffsetMap out(model.width(), model.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(x, y) = model.delta(t, {x, y});
  if (out(0, 0) < -1e-10 * std::max(1.0, model.gamma_at({0, 0})))
    throw NumericalError("offset correlation has a negative variance");
  out(0, 0) = std::max(0.0, out(0, 0));
  return out;
}

inline constexpr std::size_t default_covariance_cap = 4096;

/// C_t(x1, x2) = Delta_f(t, x1 - x2) for x1, x2 in w (raster order).
inline Eigen::MatrixXd covariance_matrix(const MicrotextureModel& model, Offset t, const PatchDomain& omega,
                                         std::size_t cap = default_covariance_cap) {
  detail::require(omega.size() <= cap, "patch domain exceeds the covariance size cap");
  const auto pts = omega.points();
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = model.delta(t, pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]);
      c(i, j) = v;
      c(j, i) = v;
    }
  return c;
}

struct Eigenvalue {
  double value = 0.0;
  long long multiplicity = 1;

  friend bool operator==(const Eigenvalue&, const Eigenvalue&) = default;
};

/// Law of sum_k lambda_k Z_k (Z_k iid chi-square(1)), through its first
/// three cumulants k_r = 2^{r-1} (r-1)! sum lambda_k^r.
struct QuadFormLaw {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  std::optional<std::vector<Eigenvalue>> eigenvalues;

  bool point_mass() const { return k1 == 0.0 && k2 == 0.0 && k3 == 0.0; }

  static QuadFormLaw from_eigenvalues(std::vector<Eigenvalue> values) {
    QuadFormLaw law;
    for (const auto& e : values) {
      detail::require(e.multiplicity > 0, "eigenvalue multiplicity must be positive");
      const double m = static_cast<double>(e.multiplicity);
      law.k1 += m * e.value;
      law.k2 += m * e.value * e.value;
      law.k3 += m * e.value * e.value * e.value;
    }
    law.k2 *= 2.0;
    law.k3 *= 8.0;
    law.eigenvalues = std::move(values);
    return law;
  }

  static QuadFormLaw from_values(std::span<const double> lambdas) {
    std::vector<Eigenvalue> v;
    v.reserve(lambdas.size());
    for (double l : lambdas) v.push_back({l, 1});
    return from_eigenvalues(std::move(v));
  }
};

/// Expands a multiset into one entry per eigenvalue, sorted ascending.
inline std::vector<double> expand(std::span<const Eigenvalue> values) {
  std::vector<double> out;
  for (const auto& e : values) out.insert(out.end(), static_cast<std::size_t>(e.multiplicity), e.value);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Relative size of Delta_f(t, 0) below which U(. + t) - U(.) is treated as
// identically zero (the model is t-periodic up to FFT round-off).
inline constexpr double degenerate_increment = 1e-12;

inline bool degenerate_offset(const MicrotextureModel& model, Offset t) {
  const double g0 = model.gamma_at({0, 0});
  if (g0 <= 0.0) return true;
  return model.delta(t, {0, 0}) <= degenerate_increment * g0;
}

// Square domains: C_t is block Toeplitz, so traces only need Delta_f on the
// difference set (-p, p)^2 weighted by the number of index tuples realizing
// each difference pattern.
inline QuadFormLaw square_cumulants(const MicrotextureModel& model, Offset t, int p) {
  const int span = 2 * p - 1;
  std::vector<double> d(static_cast<std::size_t>(span) * static_cast<std::size_t>(span));
  auto at = [&](int dx, int dy) -> double& {
    return d[static_cast<std::size_t>(dy + p - 1) * static_cast<std::size_t>(span) + static_cast<std::size_t>(dx + p - 1)];
  };
  for (int dy = -(p - 1); dy <= p - 1; ++dy)
    for (int dx = -(p - 1); dx <= p - 1; ++dx) at(dx, dy) = model.delta(t, {dx, dy});

  QuadFormLaw law;
  const double pp = static_cast<double>(p);
  law.k1 = pp * pp * at(0, 0);

  double tr2 = 0.0;
  for (int dy = -(p - 1); dy <= p - 1; ++dy)
    for (int dx = -(p - 1); dx <= p - 1; ++dx) {
      const double v = at(dx, dy);
      tr2 += static_cast<double>((p - std::abs(dx)) * (p - std::abs(dy))) * v * v;
    }

  // tr C^3 = sum over (a, b) of D(a) D(b) D(-a-b) times the number of x in w
  // with x - a and x - a - b also in w. The count factorizes per axis.
  // Per axis, step b is valid for a in [lo(a), hi(a)].
  std::vector<int> lo(static_cast<std::size_t>(span));
  std::vector<int> hi(static_cast<std::size_t>(span));
  std::vector<double> count(static_cast<std::size_t>(span) * static_cast<std::size_t>(span), 0.0);
  for (int a = -(p - 1); a <= p - 1; ++a) {
    int first = p;
    int last = -p;
    for (int b = -(p - 1); b <= p - 1; ++b) {
      const int l = std::min({0, -a, -a - b});
      const int h = std::max({0, -a, -a - b});
      if (h - l >= p) continue;
      first = std::min(first, b);
      last = std::max(last, b);
      count[static_cast<std::size_t>(a + p - 1) * static_cast<std::size_t>(span) + static_cast<std::size_t>(b + p - 1)] =
          static_cast<double>(p - (h - l));
    }
    lo[static_cast<std::size_t>(a + p - 1)] = first;
    hi[static_cast<std::size_t>(a + p - 1)] = last;
  }
  // Columns of D with dy contiguous; rev holds D(dx, -dy) at index dy + 2(p - 1).
  const int rspan = 4 * p - 3;
  std::vector<double> col(static_cast<std::size_t>(span) * static_cast<std::size_t>(span));
  std::vector<double> rev(static_cast<std::size_t>(rspan) * static_cast<std::size_t>(rspan), 0.0);
  for (int dx = -(p - 1); dx <= p - 1; ++dx)
    for (int dy = -(p - 1); dy <= p - 1; ++dy)
      col[static_cast<std::size_t>(dx + p - 1) * static_cast<std::size_t>(span) + static_cast<std::size_t>(dy + p - 1)] =
          at(dx, dy);
  for (int dx = -(2 * p - 2); dx <= 2 * p - 2; ++dx)
    for (int dy = -(2 * p - 2); dy <= 2 * p - 2; ++dy)
      if (std::abs(dx) < p && std::abs(dy) < p)
        rev[static_cast<std::size_t>(dx + 2 * p - 2) * static_cast<std::size_t>(rspan) +
            static_cast<std::size_t>(dy + 2 * p - 2)] = at(-dx, -dy);

  double tr3 = 0.0;
  for (int ax = -(p - 1); ax <= p - 1; ++ax)
    for (int bx = lo[static_cast<std::size_t>(ax + p - 1)]; bx <= hi[static_cast<std::size_t>(ax + p - 1)]; ++bx) {
      const double cx =
          count[static_cast<std::size_t>(ax + p - 1) * static_cast<std::size_t>(span) + static_cast<std::size_t>(bx + p - 1)];
      const double* da = &col[static_cast<std::size_t>(ax + p - 1) * static_cast<std::size_t>(span)];
      const double* db = &col[static_cast<std::size_t>(bx + p - 1) * static_cast<std::size_t>(span)];
      const double* dc = &rev[static_cast<std::size_t>(ax + bx + 2 * p - 2) * static_cast<std::size_t>(rspan)];
      double sx = 0.0;
      for (int ay = -(p - 1); ay <= p - 1; ++ay) {
        const int b0 = lo[static_cast<std::size_t>(ay + p - 1)];
        const int b1 = hi[static_cast<std::size_t>(ay + p - 1)];
        const double* cy = &count[static_cast<std::size_t>(ay + p - 1) * static_cast<std::size_t>(span) + static_cast<std::size_t>(p - 1)];
        const double* c = dc + (ay + 2 * p - 2);
        const double* bb = db + (p - 1);
        double s0 = 0.0;
        double s1 = 0.0;
        int by = b0;
        for (; by + 1 <= b1; by += 2) {
          s0 += cy[by] * bb[by] * c[by];
          s1 += cy[by + 1] * bb[by + 1] * c[by + 1];
        }
        if (by <= b1) s0 += cy[by] * bb[by] * c[by];
        sx += da[ay + p - 1] * (s0 + s1);
      }
      tr3 += cx * sx;
    }

  law.k2 = 2.0 * tr2;
  law.k3 = 8.0 * tr3;
  return law;
}

}  // namespace detail

/// Cumulants of AS(U, t, w) from traces of C_t: k1 = tr C, k2 = 2 tr C^2,
/// k3 = 8 tr C^3. No eigendecomposition is performed.
inline QuadFormLaw cumulants(const MicrotextureModel& model, Offset t, const PatchDomain& omega,
                             std::size_t cap = default_covariance_cap) {
  detail::require(omega.size() <= cap, "patch domain exceeds the covariance size cap");
  if (detail::degenerate_offset(model, t)) return {};
  QuadFormLaw law;
  if (omega.is_square()) {
    law = detail::square_cumulants(model, t, *omega.side());
  } else {
    const Eigen::MatrixXd c = covariance_matrix(model, t, omega, cap);
    const Eigen::MatrixXd c2 = c * c;
    law.k1 = c.trace();
    law.k2 = 2.0 * c.cwiseAbs2().sum();
    law.k3 = 8.0 * c.cwiseProduct(c2).sum();
  }
  law.k1 = std::max(0.0, law.k1);
  law.k2 = std::max(0.0, law.k2);
  law.k3 = std::max(0.0, law.k3);
  return law;
}

namespace detail {

inline double chain_eigenvalue(int m, int k) {
  const double s = std::sin(static_cast<double>(k) * std::numbers::pi / (2.0 * static_cast<double>(m)));
  return 4.0 * s * s;
}

inline std::vector<Eigenvalue> expand_chain_multiplicities(std::span<const long long> count_by_m) {
  std::vector<Eigenvalue> out;
  for (std::size_t m = 2; m < count_by_m.size(); ++m) {
    if (count_by_m[m] == 0) continue;
    for (int k = 1; k < static_cast<int>(m); ++k)
      out.push_back({chain_eigenvalue(static_cast<int>(m), k), count_by_m[m]});
  }
  return out;
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace detail

/// Closed-form eigenvalues of C_t for white noise and w = [0, p-1]^2, when
/// both components of t are nonzero: lambda_{m,k} = 4 sin^2(k pi / 2m) with
/// multiplicity r_m (independent of k), m in [2, q+1], q = ceil(p / |t|_inf).
/// Offsets with |t|_inf >= p give C_t = 2 Id.
inline std::vector<Eigenvalue> white_noise_eigenvalues(int p, Offset t) {
  detail::require(p >= 1, "patch side must be >= 1");
  const int tx = std::abs(t.x);
  const int ty = std::abs(t.y);
  detail::require(tx != 0 && ty != 0, "closed form needs both offset components nonzero");
  const long long p2 = static_cast<long long>(p) * p;
  if (std::max(tx, ty) >= p) return {{2.0, p2}};

  const int q = detail::ceil_div(p, std::max(tx, ty));
  auto corner = [&](int tc) {
    const int c = detail::ceil_div(p, tc);
    const int pc = tc * c - p;
    return static_cast<long long>((c - q) * tc + tc - pc);
  };

  std::vector<long long> r(static_cast<std::size_t>(q) + 2, 0);
  for (int m = 2; m < q; ++m) r[static_cast<std::size_t>(m)] = 2LL * tx * ty;
  r[static_cast<std::size_t>(q) + 1] = corner(tx) * corner(ty);
  long long rest = p2;
  for (int m = 2; m <= q + 1; ++m)
    if (m != q) rest -= r[static_cast<std::size_t>(m)] * (m - 1);
  if (rest < 0 || rest % (q - 1) != 0) throw NumericalError("inconsistent eigenvalue multiplicities");
  r[static_cast<std::size_t>(q)] = rest / (q - 1);
  return detail::expand_chain_multiplicities(r);
}

/// White-noise eigenvalues of C_t for w = [0, p-1]^2 and any t != 0, read
/// off the decomposition of w into maximal chains x0 + l t: a chain with L
/// points contributes 4 sin^2(k pi / 2(L+1)), k = 1..L.
inline std::vector<Eigenvalue> chain_eigenvalues(int p, Offset t) {
  detail::require(p >= 1, "patch side must be >= 1");
  detail::require(t != Offset{}, "chain decomposition needs a nonzero offset");
  auto inside = [p](Offset x) { return x.x >= 0 && x.x < p && x.y >= 0 && x.y < p; };
  std::vector<long long> count_by_m(static_cast<std::size_t>(p) + 2, 0);
  for (int y = 0; y < p; ++y)
    for (int x = 0; x < p; ++x) {
      const Offset start{x, y};
      if (inside(start - t)) continue;
      int length = 0;
      for (Offset c = start; inside(c); c = c + t) ++length;
      ++count_by_m[static_cast<std::size_t>(length) + 1];
    }
  return detail::expand_chain_multiplicities(count_by_m);
}

/// Exact AS law of unit white noise on the square p x p domain in Z^2 (no
/// wrap-around): closed form when possible, chains otherwise.
inline QuadFormLaw white_noise_law(int p, Offset t) {
  if (t == Offset{}) return {};
  if (t.x != 0 && t.y != 0) return QuadFormLaw::from_eigenvalues(white_noise_eigenvalues(p, t));
  return QuadFormLaw::from_eigenvalues(chain_eigenvalues(p, t));
}

/// One draw of f * W, W iid N(0,1) in raster order from `seed`.
inline Image sample(const MicrotextureModel& model, std::uint64_t seed) {
  NormalSource normal(seed);
  Image w(model.width(), model.height());
  for (double& v : w.values()) v = normal();
  if (model.kind() == ModelKind::white_noise) return w;
  if (model.degenerate()) return Image(model.width(), model.height());
  return fft::convolve(model.kernel(), w);
}

}  // namespace redlab
