#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "redlab/lattice.hpp"

using namespace redlab;

namespace {

EdgeVectors random_edges(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  EdgeVectors e(n);
  for (auto& v : e) v = Eigen::Vector2d(u(rng), u(rng));
  return e;
}

Basis random_basis(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {Eigen::Vector2d(u(rng), u(rng)), Eigen::Vector2d(u(rng), u(rng))};
}

Coefficients random_coefficients(std::mt19937_64& rng, std::size_t n, int range) {
  std::uniform_int_distribution<int> u(-range, range);
  Coefficients m(n);
  for (auto& c : m) c = {u(rng), u(rng)};
  return m;
}

// Jittered grid points i b1 + j b2.
std::vector<Eigen::Vector2d> planted_points(const Basis& b, int nx, int ny, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, jitter);
  std::vector<Eigen::Vector2d> pts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) pts.push_back(i * b.b1 + j * b.b2 + Eigen::Vector2d(n(rng), n(rng)));
  return pts;
}

EdgeVectors edges_of(const std::vector<Eigen::Vector2d>& pts) {
  EdgeVectors e;
  for (const auto& edge : nearest_neighbour_edges(pts)) e.push_back(edge.vector);
  return e;
}

double mean_residual(const LatticeFit& f, const EdgeVectors& e) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    s += (static_cast<double>(f.coefficients[i].m) * f.basis.b1 + static_cast<double>(f.coefficients[i].n) * f.basis.b2 - e[i])
             .norm();
  return s / static_cast<double>(e.size());
}

const Basis planted{Eigen::Vector2d(20, 0), Eigen::Vector2d(0, 15)};

}  // namespace

TEST(Graph, SingletonComponents) {
  BinaryMap d(64, 64);
  OffsetMap as(64, 64, 1.0);
  for (Offset t : {Offset{10, 0}, Offset{20, 0}, Offset{0, 15}}) d[d.raw(t)] = 1;
  const auto g = build_graph(d, as);
  ASSERT_EQ(g.vertices.size(), 3u);
  EXPECT_EQ(g.components, 3);
  EXPECT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(g.vertices[0], (Offset{0, 15}));
  EXPECT_EQ(g.vertices[1], (Offset{10, 0}));
  EXPECT_EQ(g.vertices[2], (Offset{20, 0}));
  for (const auto& e : g.edges) {
    EXPECT_TRUE(e.vector.x() > 0 || (e.vector.x() == 0 && e.vector.y() >= 0));
    const Offset a = g.vertices[static_cast<std::size_t>(e.from)];
    const Offset b = g.vertices[static_cast<std::size_t>(e.to)];
    EXPECT_DOUBLE_EQ(std::abs(e.vector.x()), std::abs(b.x - a.x));
    EXPECT_DOUBLE_EQ(std::abs(e.vector.y()), std::abs(b.y - a.y));
  }
  EXPECT_FALSE(build_graph(BinaryMap(8, 8), OffsetMap(8, 8)).fit_ready());
}

TEST(Graph, BlobCollapsesToMinimum) {
  BinaryMap d(32, 32);
  OffsetMap as(32, 32, 5.0);
  const Offset cells[] = {{10, 10}, {11, 10}, {12, 11}, {11, 12}, {10, 11}};
  double v = 9.0;
  for (Offset c : cells) {
    d[d.raw(c)] = 1;
    as[as.raw(c)] = v--;
  }
  const auto g = build_graph(d, as);
  ASSERT_EQ(g.vertices.size(), 1u);
  EXPECT_EQ(g.vertices[0], (Offset{10, 11}));
  EXPECT_FALSE(g.fit_ready());
}

TEST(Graph, OriginComponentDroppedAndTorusWrap) {
  BinaryMap d(20, 20);
  OffsetMap as(20, 20, 1.0);
  for (Offset t : {Offset{0, 0}, Offset{1, 0}, Offset{-1, 0}, Offset{0, 1}}) d[d.raw(t)] = 1;
  // One component across the seam, with its minimum on the negative side.
  d[d.raw(Offset{9, 5})] = 1;
  d[d.raw(Offset{10, 5})] = 1;
  as[as.raw(Offset{10, 5})] = 0.5;
  d[d.raw(Offset{5, 5})] = 1;
  const auto g = build_graph(d, as);
  ASSERT_EQ(g.vertices.size(), 2u);
  EXPECT_EQ(g.vertices[0], (Offset{-10, 5}));
  EXPECT_EQ(g.vertices[1], (Offset{5, 5}));
}

TEST(Graph, PlantedLatticeVertexCount) {
  BinaryMap d(128, 128);
  OffsetMap as(128, 128, 1.0);
  int planted_count = 0;
  for (int j = -3; j <= 3; ++j)
    for (int i = -2; i <= 2; ++i) {
      if (i == 0 && j == 0) continue;
      const Offset t{20 * i, 15 * j};
      d[d.raw(t)] = 1;
      d[d.raw(t + Offset{1, 0})] = 1;
      as[as.raw(t)] = 0.0;
      ++planted_count;
    }
  const auto g = build_graph(d, as);
  EXPECT_EQ(static_cast<int>(g.vertices.size()), planted_count);
  for (Offset v : g.vertices) {
    EXPECT_EQ(v.x % 20, 0);
    EXPECT_EQ(v.y % 15, 0);
  }
}

TEST(Graph, NearestNeighbourDegree) {
  const auto pts = planted_points(planted, 5, 5, 0.0, 1);
  const auto edges = nearest_neighbour_edges(pts);
  std::vector<int> degree(pts.size(), 0);
  for (const auto& e : edges) {
    ++degree[static_cast<std::size_t>(e.from)];
    ++degree[static_cast<std::size_t>(e.to)];
    EXPECT_LT(e.from, e.to);
  }
  for (int k : degree) EXPECT_GE(k, 4);
  // Every edge joins two grid points, so it is an integer combination.
  for (const auto& e : edges) {
    const double i = e.vector.x() / 20.0;
    const double j = e.vector.y() / 15.0;
    EXPECT_NEAR(i, std::round(i), 1e-12);
    EXPECT_NEAR(j, std::round(j), 1e-12);
    EXPECT_LE(e.vector.norm(), 30.0);
  }
}

TEST(Energy, Examples) {
  std::mt19937_64 rng(2);
  const EdgeVectors e = random_edges(rng, 7, 30.0);
  const Coefficients zero(e.size());
  double s = 0.0;
  for (const auto& v : e) s += v.squaredNorm();
  EXPECT_NEAR(q_energy(random_basis(rng, 10.0), zero, e, 0.0, 0.0), s, 1e-9 * s);

  const Basis b = random_basis(rng, 10.0);
  const Coefficients m = random_coefficients(rng, 7, 4);
  EdgeVectors exact;
  for (const auto& c : m) exact.push_back(static_cast<double>(c.m) * b.b1 + static_cast<double>(c.n) * b.b2);
  EXPECT_NEAR(q_energy(b, m, exact, 0.0, 0.0), 0.0, 1e-18);
}

TEST(Energy, MatchesMatrixForm) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial);
    const EdgeVectors e = random_edges(rng, n, 25.0);
    const Basis b = random_basis(rng, 12.0);
    const Coefficients m = random_coefficients(rng, n, 5);
    const double db = 0.3, dm = 2.0;
    // E - M B with M as an |E| x 2 matrix and B as 2 x 2 rows.
    Eigen::MatrixXd mm(static_cast<Eigen::Index>(n), 2);
    Eigen::MatrixXd ee(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
      mm(static_cast<Eigen::Index>(i), 0) = static_cast<double>(m[i].m);
      mm(static_cast<Eigen::Index>(i), 1) = static_cast<double>(m[i].n);
      ee.row(static_cast<Eigen::Index>(i)) = e[i].transpose();
    }
    Eigen::Matrix2d bb;
    bb.row(0) = b.b1.transpose();
    bb.row(1) = b.b2.transpose();
    const double expected = (mm * bb - ee).squaredNorm() + db * bb.squaredNorm() + dm * mm.squaredNorm();
    EXPECT_LT(oracle::rel_diff(q_energy(b, m, e, db, dm), expected), 1e-12);
  }
}

TEST(Energy, EdgeOrientationInvariance) {
  std::mt19937_64 rng(4);
  EdgeVectors e = random_edges(rng, 9, 25.0);
  Coefficients m = random_coefficients(rng, 9, 3);
  const Basis b = random_basis(rng, 10.0);
  const double q = q_energy(b, m, e, 0.1, 5.0);
  for (std::size_t i = 0; i < e.size(); i += 2) {
    e[i] = -e[i];
    m[i] = {-m[i].m, -m[i].n};
  }
  EXPECT_NEAR(q_energy(b, m, e, 0.1, 5.0), q, 1e-10 * q);
}

TEST(UpdateM, OrthonormalExample) {
  const Basis b{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  const auto u = update_M(b, {Eigen::Vector2d(2.1, -0.2)}, 0.0);
  EXPECT_NEAR(u.real[0].x(), 2.1, 1e-12);
  EXPECT_NEAR(u.real[0].y(), -0.2, 1e-12);
  EXPECT_EQ(u.rounded[0], (Coefficient{2, 0}));
  const auto big = update_M(b, {Eigen::Vector2d(2.1, -0.2)}, 1e12);
  EXPECT_LT(big.real[0].norm(), 1e-10);
  EXPECT_EQ(big.rounded[0], (Coefficient{0, 0}));
}

TEST(UpdateM, HalfIntegersRoundAwayFromZero) {
  const Basis b{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  const auto u = update_M(b, {Eigen::Vector2d(2.5, -1.5)}, 0.0);
  EXPECT_EQ(u.rounded[0], (Coefficient{3, -2}));
}

TEST(UpdateM, MatchesDenseLeastSquares) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const EdgeVectors e = random_edges(rng, n, 30.0);
    const Basis b = random_basis(rng, 10.0);
    const double dm = trial % 3 == 0 ? 0.0 : 3.0;
    // Stack [kron(Id, B^T); sqrt(dm) Id] m ~ [E; 0] and solve by QR.
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4 * ni, 2 * ni);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4 * ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
      a.block(2 * i, 2 * i, 2, 1) = b.b1;
      a.block(2 * i, 2 * i + 1, 2, 1) = b.b2;
      rhs.segment(2 * i, 2) = e[static_cast<std::size_t>(i)];
      a(2 * ni + 2 * i, 2 * i) = std::sqrt(dm);
      a(2 * ni + 2 * i + 1, 2 * i + 1) = std::sqrt(dm);
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
    const auto u = update_M(b, e, dm);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_LT((u.real[i] - sol.segment(2 * static_cast<Eigen::Index>(i), 2)).norm(), 1e-8 * (1.0 + sol.norm()));
  }
}

TEST(UpdateM, ExactIntegerMinimizerOnOrthogonalBases) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> len(2.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = ang(rng);
    const Eigen::Vector2d d(std::cos(a), std::sin(a));
    const Basis b{len(rng) * d, len(rng) * Eigen::Vector2d(-d.y(), d.x())};
    const EdgeVectors e = random_edges(rng, 1, 40.0);
    const auto u = update_M(b, e, 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (int m = -10; m <= 10; ++m)
      for (int n = -10; n <= 10; ++n) best = std::min(best, (m * b.b1 + n * b.b2 - e[0]).squaredNorm());
    const Coefficient c = u.rounded[0];
    if (std::abs(c.m) > 10 || std::abs(c.n) > 10) continue;
    EXPECT_NEAR((static_cast<double>(c.m) * b.b1 + static_cast<double>(c.n) * b.b2 - e[0]).squaredNorm(), best, 1e-9);
  }
}

TEST(UpdateM, SingularBasisThrows) {
  const Basis b{Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 4)};
  EXPECT_THROW(update_M(b, {Eigen::Vector2d(1, 1)}, 0.0), NumericalError);
  EXPECT_NO_THROW(update_M(b, {Eigen::Vector2d(1, 1)}, 1.0));
}

TEST(UpdateB, DecoupledExample) {
  const EdgeVectors e{Eigen::Vector2d(10, 1), Eigen::Vector2d(11, -1), Eigen::Vector2d(9, 0.5)};
  const Coefficients m(3, Coefficient{1, 0});
  const Basis b = update_B(m, e, 1e-12);
  EXPECT_NEAR(b.b1.x(), 10.0, 1e-9);
  EXPECT_NEAR(b.b1.y(), 0.5 / 3.0, 1e-9);
  EXPECT_LT(b.b2.norm(), 1e-12);
  EXPECT_THROW(update_B(m, e, 0.0), NumericalError);
  EXPECT_LT(update_B(m, e, 1e12).b1.norm(), 1e-9);
}

TEST(UpdateB, BeatsRandomProbes) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const EdgeVectors e = random_edges(rng, 8, 30.0);
    const Coefficients m = random_coefficients(rng, 8, 3);
    const Basis b = update_B(m, e, 1e-2);
    const double q = q_energy(b, m, e, 1e-2, 10.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      Basis probe = trial % 2 == 0 ? random_basis(rng, 20.0) : b;
      if (trial % 2 == 1) {
        probe.b1 += Eigen::Vector2d(jitter(rng), jitter(rng)) * 0.01;
        probe.b2 += Eigen::Vector2d(jitter(rng), jitter(rng)) * 0.01;
      }
      EXPECT_LE(q, q_energy(probe, m, e, 1e-2, 10.0) + 1e-9 * q);
    }
  }
}

TEST(Minimization, SingleEdgeMedianInit) {
  LatticeParams params;
  params.iterations = 1;
  const EdgeVectors e{Eigen::Vector2d(10, 0)};
  const Basis b0 = orthogonal_basis(e[0]);
  EXPECT_EQ(b0.b1, Eigen::Vector2d(10, 0));
  EXPECT_EQ(b0.b2, Eigen::Vector2d(0, 10));
  EXPECT_GT(b0.determinant(), 0.0);
  const auto u = update_M(b0, e, params.delta_m);
  EXPECT_NEAR(u.real[0].x(), 100.0 / (100.0 + params.delta_m), 1e-12);
  EXPECT_NEAR(u.real[0].y(), 0.0, 1e-12);
  EXPECT_EQ(u.rounded[0], (Coefficient{1, 0}));
  const auto fit = alternate_minimization(e, params);
  EXPECT_EQ(fit.coefficients[0], (Coefficient{1, 0}));
}

TEST(Minimization, MedianEdge) {
  const EdgeVectors e{Eigen::Vector2d(5, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(3, 0), Eigen::Vector2d(0, 4)};
  EXPECT_EQ(median_edge(e), 2u);
}

TEST(Minimization, MonotoneAndStationary) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const EdgeVectors e = random_edges(rng, 3 + static_cast<std::size_t>(trial % 10), 40.0);
    LatticeParams params;
    params.iterations = 200;
    params.init = trial % 2 == 0 ? Init::median : Init::random;
    params.seed = static_cast<std::uint64_t>(trial);
    const auto fit = alternate_minimization(e, params);
    for (std::size_t i = 1; i < fit.q_trajectory.size(); ++i) EXPECT_LE(fit.q_trajectory[i], fit.q_trajectory[i - 1]);
    EXPECT_TRUE(fit.converged_at.has_value());
    EXPECT_NEAR(fit.sigma2, fit.q_trajectory.back() / (4.0 * (static_cast<double>(e.size()) + 1.0)), 1e-12 * fit.sigma2);
    EXPECT_LT(oracle::rel_diff(q_energy(fit.basis, fit.coefficients, e, params.delta_b, params.delta_m), fit.q_trajectory.back()),
              1e-12);
    for (std::size_t i = 1; i < fit.log_posterior.size(); ++i) {
      const double s2 = fit.sigma2;
      EXPECT_GE(log_posterior(fit.q_trajectory[i], e.size(), s2), log_posterior(fit.q_trajectory[i - 1], e.size(), s2));
    }
  }
}

TEST(Minimization, EarlyStopMatchesFullRun) {
  std::mt19937_64 rng(9);
  const EdgeVectors e = random_edges(rng, 12, 40.0);
  LatticeParams a;
  a.iterations = 200;
  LatticeParams b = a;
  b.iterations = 400;
  const auto fa = alternate_minimization(e, a);
  const auto fb = alternate_minimization(e, b);
  EXPECT_EQ(fa.basis, fb.basis);
  EXPECT_EQ(fa.coefficients, fb.coefficients);
  EXPECT_EQ(fa.sigma2, fb.sigma2);
}

TEST(Minimization, PerfectLatticeRecovered) {
  const EdgeVectors e{planted.b1, planted.b2, planted.b1 + planted.b2, planted.b1, planted.b2};
  LatticeParams params;
  params.iterations = 50;
  const auto fit = alternate_minimization(e, params);
  EXPECT_LT(std::abs(std::abs(fit.determinant()) - 300.0), 0.05 * 300.0);
  for (std::size_t i = 0; i < e.size(); ++i)
    EXPECT_LE((static_cast<double>(fit.coefficients[i].m) * fit.basis.b1 +
               static_cast<double>(fit.coefficients[i].n) * fit.basis.b2 - e[i])
                  .norm(),
              0.5);
}

TEST(Minimization, JitteredLatticeRecovered) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EdgeVectors e = edges_of(planted_points(planted, 5, 5, 0.5, seed));
    const auto fit = alternate_minimization(e, LatticeParams{});
    if (std::abs(std::abs(fit.determinant()) - 300.0) <= 15.0 && mean_residual(fit, e) <= 1.0) ++good;
  }
  EXPECT_GE(good, 18);
}

TEST(Minimization, GivenInitNeedsBasis) {
  LatticeParams params;
  params.init = Init::given;
  EXPECT_THROW(alternate_minimization({Eigen::Vector2d(1, 0)}, params), ValidationError);
  params.initial_basis = planted;
  EXPECT_NO_THROW(alternate_minimization({Eigen::Vector2d(1, 0)}, params));
  EXPECT_THROW(alternate_minimization({}, LatticeParams{}), ValidationError);
}

TEST(Cper, Formula) {
  LatticeFit f;
  f.basis = {Eigen::Vector2d(5, 0), Eigen::Vector2d(0, 5)};
  f.sigma2 = 1.0;
  EXPECT_NEAR(c_per(f, 10), std::numbers::pi / 250.0, 1e-15);
  EXPECT_NEAR(c_per(f, 10), 0.012566, 1e-6);
  f.sigma2 = 4.0;
  EXPECT_NEAR(c_per(f, 10), 4.0 * std::numbers::pi / 250.0, 1e-15);
  // Unimodular change of basis keeps |det|.
  f.basis = {Eigen::Vector2d(5, 0), Eigen::Vector2d(5, 5)};
  EXPECT_NEAR(c_per(f, 10), 4.0 * std::numbers::pi / 250.0, 1e-15);
  f.basis = {Eigen::Vector2d(0, 5), Eigen::Vector2d(5, 0)};
  EXPECT_NEAR(c_per(f, 10), 4.0 * std::numbers::pi / 250.0, 1e-15);
  f.degenerate = true;
  EXPECT_TRUE(std::isinf(c_per(f, 10)));
  EXPECT_THROW(c_per(f, 0), ValidationError);
}

namespace {

// Median c_per over 20 seeds for a 7 x 7 planted grid and for the same
// number of points drawn uniformly over its bounding box.
std::pair<double, double> planted_and_shuffled(double delta_m) {
  LatticeParams params;
  params.delta_m = delta_m;
  std::vector<double> planted_c, shuffled_c;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = planted_points(planted, 7, 7, 0.0, seed);
    planted_c.push_back(c_per(alternate_minimization(edges_of(pts), params), static_cast<int>(pts.size())));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 120.0), uy(0.0, 90.0);
    std::vector<Eigen::Vector2d> random(pts.size());
    for (auto& p : random) p = Eigen::Vector2d(ux(rng), uy(rng));
    shuffled_c.push_back(c_per(alternate_minimization(edges_of(random), params), static_cast<int>(random.size())));
  }
  return {median(planted_c), median(shuffled_c)};
}

}  // namespace

TEST(Cper, PlantedVersusShuffled) {
  // With dM = 10 the coefficient penalty alone puts sigma^2 near 2.5 on a
  // perfect grid, which caps the separation.
  const auto [p10, s10] = planted_and_shuffled(10.0);
  EXPECT_LT(p10, 1e-3);
  EXPECT_GE(s10, 5.0 * p10);
  const auto [p1, s1] = planted_and_shuffled(1.0);
  EXPECT_LT(p1, 1e-3);
  EXPECT_GE(s1, 10.0 * p1);
}

TEST(Extract, FromDetection) {
  Image u(40, 36);
  const Image tile = oracle::random_image(10, 9, 10, 0.0, 255.0);
  for (int y = 0; y < 36; ++y)
    for (int x = 0; x < 40; ++x) u(x, y) = tile(x % 10, y % 9);
  const auto m = MicrotextureModel::white_noise(40, 36);
  const auto det = autosim_detection(u, PatchDomain::square({0, 0}, 6), m, 1.0);
  const auto r = extract_lattice(det, LatticeParams{});
  ASSERT_TRUE(r.sufficient());
  EXPECT_EQ(r.graph.components, 15);
  EXPECT_NEAR(std::abs(r.fit->determinant()), 90.0, 1e-3 * 90.0);
  EXPECT_TRUE(std::isfinite(r.c_per));

  const auto none = extract_lattice(autosim_detection(Image(16, 16, 3.0), PatchDomain::square({0, 0}, 4),
                                                      MicrotextureModel::white_noise(16, 16), 1.0),
                                    LatticeParams{});
  EXPECT_FALSE(none.sufficient());
  EXPECT_TRUE(std::isinf(none.c_per));
}

namespace {

std::vector<Image> small_textures() {
  Image board(44, 42);
  for (int y = 0; y < 42; ++y)
    for (int x = 0; x < 44; ++x) board(x, y) = ((x / 6 + y / 6) % 2) ? 200.0 : 50.0;
  const Image noise = oracle::random_image(44, 42, 11, 0.0, 255.0);
  Image stripes(44, 42);
  for (int y = 0; y < 42; ++y)
    for (int x = 0; x < 44; ++x) stripes(x, y) = (x / 5) % 2 ? 30.0 : 220.0;
  return {board, noise, stripes};
}

RankParams small_params() {
  RankParams rp;
  rp.anchors = 6;
  rp.p = 8;
  rp.seed = 3;
  return rp;
}

}  // namespace

TEST(Rank, SingleImage) {
  const auto scores = rank_textures({small_textures()[0]}, small_params(), {"board"});
  ASSERT_EQ(scores.size(), 1u);
  EXPECT_EQ(scores[0].name, "board");
  EXPECT_EQ(scores[0].successes + scores[0].failures, 6);
}

TEST(Rank, OrderInvariant) {
  const auto tex = small_textures();
  const auto rp = small_params();
  const auto a = rank_textures(tex, rp, {"board", "noise", "stripes"});
  const auto b = rank_textures({tex[2], tex[0], tex[1]}, rp, {"stripes", "board", "noise"});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].median_c_per, b[i].median_c_per);
    EXPECT_EQ(a[i].successes, b[i].successes);
  }
  EXPECT_EQ(a.back().name, "noise");
}

TEST(Rank, ThreadCountDoesNotChangeScores) {
  auto rp = small_params();
  const auto tex = small_textures();
  rp.threads = 1;
  const auto a = rank_textures(tex, rp);
  rp.threads = 3;
  const auto b = rank_textures(tex, rp);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].median_c_per, b[i].median_c_per);
}

TEST(Rank, MedianHelper) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), ValidationError);
}
