#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "avltraj/methods.hpp"
#include "oracles.hpp"

using namespace avltraj;

namespace {

ObservationSeries noisy_trip(std::uint64_t seed, std::size_t n, double pos_noise = 10.0) {
  auto trip = oracle::random_monotone_trip(seed, n, 10.0, 3.0);
  std::mt19937_64 rng(seed * 131 + 3);
  std::normal_distribution<double> e(0.0, pos_noise);
  for (double& x : trip.x) x += e(rng);
  return {"trip", trip.t, monotone_correct(trip.x), trip.v};
}

oracle::SplineProblem problem_of(const ObservationSeries& s, const VSplineConfig& cfg,
                                 std::vector<double> v) {
  oracle::SplineProblem p;
  p.t.assign(s.t().begin(), s.t().end());
  p.x.assign(s.x().begin(), s.x().end());
  p.v = std::move(v);
  p.gamma = cfg.gamma;
  p.eta = cfg.eta;
  p.velocity_floor = cfg.velocity_floor;
  return p;
}

std::vector<double> observed_theta(const ObservationSeries& s) {
  std::vector<double> th;
  for (std::size_t i = 0; i < s.size(); ++i) {
    th.push_back(s.x()[i]);
    th.push_back(s.v()[i]);
  }
  return th;
}

}  // namespace

TEST(Penalty, BlockEntries) {
  const std::vector<double> t{0, 1}, w{1};
  const auto om = assemble_penalty(t, w).to_dense();
  const Eigen::Matrix4d expect{{12, 6, -12, 6}, {6, 4, -6, 2}, {-12, -6, 12, -6}, {6, 2, -6, 4}};
  EXPECT_TRUE(om.isApprox(expect, 1e-15)) << om;
}

TEST(Penalty, AdaptiveWeight) {
  const std::vector<double> t{0, 2}, x{0, 4};
  EXPECT_DOUBLE_EQ(adaptive_penalty_weights(t, x, 1.0)[0], 0.5);
  // Stationary interval uses the 0.1 ft/s floor.
  const std::vector<double> xs{3, 3};
  EXPECT_DOUBLE_EQ(adaptive_penalty_weights(t, xs, 1.0)[0], 2.0 / 0.01);
}

TEST(Penalty, StraightLineHasZeroPenalty) {
  const auto s = noisy_trip(3, 12);
  const auto om = assemble_penalty(s, 0.01);
  std::vector<double> th;
  for (double ti : s.t()) {
    th.push_back(7 + 33 * ti);
    th.push_back(33);
  }
  EXPECT_NEAR(om.quadratic_form(th), 0.0, 1e-6);
}

TEST(Penalty, SymmetricPositiveSemidefinite) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = noisy_trip(seed, 2 + seed % 9);
    const auto om = assemble_penalty(s, 0.05).to_dense();
    EXPECT_TRUE(om.isApprox(om.transpose(), 0.0));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(om);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 50);
    for (int q = 0; q < 50; ++q) {
      std::vector<double> th(2 * s.size());
      for (double& x : th) x = g(rng);
      EXPECT_GE(assemble_penalty(s, 0.05).quadratic_form(th), -1e-9);
    }
  }
}

TEST(VSpline, PenaltyFreeLimitMatchesVchip) {
  const auto s = noisy_trip(8, 15);
  VSplineConfig cfg;
  cfg.eta = 1e-12;
  const auto th = vspline_theta(s, cfg);
  const auto obs = observed_theta(s);
  for (std::size_t i = 0; i < th.size(); ++i) EXPECT_NEAR(th[i], obs[i], 1e-6);
  const auto a = fit_vspline(s, cfg);
  const auto b = fit_vchip(s);
  for (double t = s.t_begin(); t <= s.t_end(); t += 0.7) EXPECT_NEAR(a.position(t), b.position(t), 1e-5);
}

TEST(VSpline, MatchesBruteForceMinimizer) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = noisy_trip(seed, 4);
    VSplineConfig cfg;
    cfg.gamma = 1;
    cfg.eta = 0.1;
    const auto th = vspline_theta(s, cfg);
    const auto p = problem_of(s, cfg, {s.v().begin(), s.v().end()});
    const auto ref = oracle::minimize_quadratic(p, observed_theta(s), 1.0);
    for (std::size_t i = 0; i < th.size(); ++i) EXPECT_NEAR(th[i], ref[i], 1e-6) << seed << " " << i;
  }
}

TEST(VSpline, ReproducesStraightLine) {
  std::vector<double> t{0, 3, 4, 9, 15, 16, 22}, x, v;
  for (double ti : t) {
    x.push_back(100 + 25 * ti);
    v.push_back(25);
  }
  const ObservationSeries s("line", t, x, v);
  for (double gamma : {0.1, 1.0, 10.0}) {
    VSplineConfig cfg;
    cfg.gamma = gamma;
    cfg.eta = 0.5;
    const auto th = vspline_theta(s, cfg);
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_NEAR(th[2 * i], x[i], 1e-8);
      EXPECT_NEAR(th[2 * i + 1], 25, 1e-8);
    }
  }
}

TEST(VSpline, GradientVanishesAtSolution) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const std::size_t n = 2 + seed % 19;
    const auto s = noisy_trip(seed, n);
    VSplineConfig cfg;
    cfg.eta = 0.05;
    const auto th = vspline_theta(s, cfg);
    const auto omega = assemble_penalty(s, cfg.eta);
    const auto sys = build_spline_system(s.t(), s.x(), s.v(), omega, cfg.gamma);
    const auto lhs_th = sys.lhs.multiply(th);
    double grad_max = 0, scale = 1;
    for (std::size_t i = 0; i < th.size(); ++i) {
      grad_max = std::max(grad_max, std::abs(2 * lhs_th[i] - 2 * sys.rhs[i]));
      scale = std::max(scale, std::abs(sys.rhs[i]));
    }
    EXPECT_LT(grad_max, 1e-8 * scale) << seed;

    // Away from the optimum the analytic gradient must match finite
    // differences of the objective computed from its definition.
    const auto p = problem_of(s, cfg, {s.v().begin(), s.v().end()});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 5);
    auto off = th;
    for (double& x : off) x += g(rng);
    const auto lhs_off = sys.lhs.multiply(off);
    const double step = 1e-3;
    for (std::size_t j = 0; j < off.size(); ++j) {
      auto a = off;
      a[j] += step;
      auto b = off;
      b[j] -= step;
      const double fd = (oracle::spline_objective(p, a) - oracle::spline_objective(p, b)) / (2 * step);
      const double analytic = 2 * lhs_off[j] - 2 * sys.rhs[j];
      EXPECT_LE(std::abs(fd - analytic), 1e-4 * std::max(1.0, std::abs(analytic))) << seed << " " << j;
    }
  }
}

TEST(VSpline, ObjectiveMinimalUnderPerturbation) {
  const auto s = noisy_trip(99, 10);
  VSplineConfig cfg;
  const auto th = vspline_theta(s, cfg);
  const auto p = problem_of(s, cfg, {s.v().begin(), s.v().end()});
  const double f0 = oracle::spline_objective(p, th);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  for (int q = 0; q < 10000; ++q) {
    auto a = th;
    const double scale = std::pow(10.0, -3 + 4 * (q % 5) / 4.0);
    for (double& x : a) x += scale * g(rng);
    ASSERT_GE(oracle::spline_objective(p, a), f0 - 1e-9 * std::max(1.0, f0));
  }
}

TEST(VSpline, BandedSolverMatchesDense) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = noisy_trip(seed, 50);
    VSplineConfig dense, banded;
    banded.solver = VSplineSolver::banded;
    const auto a = vspline_theta(s, dense);
    const auto b = vspline_theta(s, banded);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8 * std::max(1.0, std::abs(a[i])));
  }
}

TEST(VSpline, SingularSystemReported) {
  // gamma = 0 leaves velocities pinned only by a tiny penalty.
  const ObservationSeries s("trip", {0, 1, 2}, {0, 10, 20}, {10, 10, 10});
  VSplineConfig cfg;
  cfg.gamma = 0;
  cfg.eta = 1e-300;
  for (auto solver : {VSplineSolver::dense, VSplineSolver::banded}) {
    cfg.solver = solver;
    try {
      (void)vspline_theta(s, cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::singular_system);
    }
  }
  cfg.eta = -1;
  EXPECT_THROW((void)vspline_theta(s, cfg), Error);
}

TEST(VSplineMp, MuZeroEqualsVsplineOnProjectedVelocities) {
  const auto s = noisy_trip(14, 25);
  VSplineConfig cfg;
  cfg.mu = 0;
  const auto a = vspline_mp_theta(s, cfg);
  const auto b = vspline_theta(s.with_velocities(projected_velocities(s)), cfg);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10 * std::max(1.0, std::abs(b[i])));
}

TEST(VSplineMp, PenaltyContributions) {
  const std::vector<double> t{0, 2}, s{3};
  const auto p = assemble_monotonicity_penalty(t, s, 1.0);
  EXPECT_DOUBLE_EQ(p.diagonal[1], 0.5);
  EXPECT_DOUBLE_EQ(p.diagonal[3], 0.5);
  EXPECT_DOUBLE_EQ(p.linear[1], 1.5);
  EXPECT_DOUBLE_EQ(p.linear[3], 1.5);
  EXPECT_DOUBLE_EQ(p.diagonal[0], 0.0);
  EXPECT_DOUBLE_EQ(p.diagonal[2], 0.0);
}

TEST(VSplineMp, MatchesBruteForceMinimizer) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = noisy_trip(seed, 5);
    VSplineConfig cfg;
    cfg.mu = 2.0;
    cfg.eta = 0.1;
    const auto th = vspline_mp_theta(s, cfg);
    auto p = problem_of(s, cfg, projected_velocities(s));
    p.mu = cfg.mu;
    const auto ref = oracle::minimize_quadratic(p, observed_theta(s), 1.0);
    for (std::size_t i = 0; i < th.size(); ++i) EXPECT_NEAR(th[i], ref[i], 1e-6);
  }
}

TEST(VSplineMp, LargeMuPullsVelocitiesToSecants) {
  const ObservationSeries s("trip", {0, 4, 10}, {0, 60, 240}, {12, 20, 33});
  VSplineConfig cfg;
  cfg.mu = 1e6;
  const auto th = vspline_mp_theta(s, cfg);
  const auto sec = secant_slopes(s);
  EXPECT_NEAR(th[1], sec[0], 1e-3);
  EXPECT_NEAR(th[5], sec[1], 1e-3);
  // The interior velocity meets two secant targets; the limit is their
  // 1/h-weighted mean.
  const double w0 = 1.0 / 4, w1 = 1.0 / 6;
  EXPECT_NEAR(th[3], (w0 * sec[0] + w1 * sec[1]) / (w0 + w1), 1e-3);
}

TEST(VSplineMp, RejectsNonMonotone) {
  const ObservationSeries s("trip", {0, 1, 2}, {0, 10, 5}, {1, 1, 1});
  EXPECT_THROW((void)vspline_mp_theta(s, VSplineConfig{}), Error);
}

TEST(VSplineMe, DormantRepairEqualsVchipMeOnTheta) {
  std::vector<double> t{0, 3, 4, 9, 15, 16, 22}, x, v;
  for (double ti : t) {
    x.push_back(100 + 25 * ti + 0.2 * ti * ti);
    v.push_back(25 + 0.4 * ti);
  }
  const ObservationSeries s("trip", t, x, v);
  VSplineConfig cfg;
  const auto th = vspline_theta(s, cfg);
  const auto k = theta_knots(t, th);
  ASSERT_TRUE(detail::is_nondecreasing(k.y()));
  const auto a = fit_vspline_me(s, cfg);
  const auto b = fit_vchip_me(ObservationSeries("trip", t, {k.y().begin(), k.y().end()},
                                                 {k.m().begin(), k.m().end()}));
  for (double tq = 0; tq <= 22; tq += 0.5) EXPECT_NEAR(a.position(tq), b.position(tq), 1e-10);
}

TEST(VSplineMe, GridMonotoneOnRandomInputs) {
  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto s = noisy_trip(seed, 20, 20.0);
    failures += !is_monotone_on_grid(fit_vspline_me(s, VSplineConfig{}), 0.1, 1e-9);
  }
  EXPECT_EQ(failures, 0);
}
