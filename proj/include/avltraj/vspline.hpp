#pragma once

// Velocity-aware smoothing splines: V-SPLINE, V-SPLINE-MP, V-SPLINE-ME.
//
// The spline is a cubic Hermite curve whose knot values theta alternate
// position and velocity: theta[2i] is the position at t_i, theta[2i+1] the
// velocity. The fit minimises
//
//   |B theta - x|^2 + gamma |C theta - v|^2 + n theta' Omega theta
//
// where Omega integrates the squared second derivative of each Hermite piece,
// weighted per interval by lambda_i = eta h_i / vavg_i^2. The normal equations
// are banded with three sub-diagonals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "avltraj/banded.hpp"
#include "avltraj/core.hpp"
#include "avltraj/model.hpp"
#include "avltraj/position.hpp"
#include "avltraj/velocity.hpp"

namespace avltraj {

enum class VSplineSolver {
  dense,   // Cholesky of the full 2n x 2n normal matrix, O(n^3)
  banded,  // band Cholesky, O(n)
};

struct VSplineConfig {
  double gamma = 1.0;
  double eta = 0.01;
  double mu = 1.0;
  /// Average speeds below this use it instead in the adaptive weight.
  double velocity_floor = 0.1;
  VSplineSolver solver = VSplineSolver::dense;

  void validate() const {
    detail::require(gamma >= 0.0, ErrorKind::invalid_argument, "V-SPLINE: gamma must be >= 0");
    detail::require(eta > 0.0, ErrorKind::invalid_argument, "V-SPLINE: eta must be > 0");
    detail::require(mu >= 0.0, ErrorKind::invalid_argument, "V-SPLINE: mu must be >= 0");
    detail::require(velocity_floor > 0.0, ErrorKind::invalid_argument,
                    "V-SPLINE: velocity floor must be > 0");
  }
};

inline constexpr std::size_t kSplineBandwidth = 3;

/// lambda_i = eta h_i / vavg_i^2 with vavg_i the interval's secant speed.
inline std::vector<double> adaptive_penalty_weights(std::span<const double> t,
                                                    std::span<const double> x, double eta,
                                                    double velocity_floor = 0.1) {
  detail::require(t.size() >= 2, ErrorKind::invalid_argument, "penalty weights: need 2 samples");
  std::vector<double> lambda(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    detail::require(h > 0.0, ErrorKind::invalid_argument, "penalty weights: zero-length interval");
    const double vavg = std::max(std::abs((x[i + 1] - x[i]) / h), velocity_floor);
    lambda[i] = eta * h / (vavg * vavg);
  }
  return lambda;
}

/// Smoothness penalty Omega for the given interval weights.
inline SymmetricBandMatrix assemble_penalty(std::span<const double> t,
                                            std::span<const double> weights) {
  detail::require(t.size() >= 2 && weights.size() + 1 == t.size(), ErrorKind::invalid_argument,
                  "assemble_penalty: need one weight per interval");
  SymmetricBandMatrix omega(2 * t.size(), kSplineBandwidth);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    detail::require(h > 0.0, ErrorKind::invalid_argument, "assemble_penalty: zero-length interval");
    const double l = weights[i];
    const double c12 = l * 12.0 / (h * h * h);
    const double c6 = l * 6.0 / (h * h);
    const double c4 = l * 4.0 / h;
    const double c2 = l * 2.0 / h;
    const std::size_t p0 = 2 * i, v0 = 2 * i + 1, p1 = 2 * i + 2, v1 = 2 * i + 3;
    omega.add(p0, p0, c12);
    omega.add(p1, p1, c12);
    omega.add(p0, p1, -c12);
    omega.add(p0, v0, c6);
    omega.add(p0, v1, c6);
    omega.add(v0, p1, -c6);
    omega.add(p1, v1, -c6);
    omega.add(v0, v0, c4);
    omega.add(v1, v1, c4);
    omega.add(v0, v1, c2);
  }
  return omega;
}

inline SymmetricBandMatrix assemble_penalty(const ObservationSeries& series, double eta,
                                            double velocity_floor = 0.1) {
  const auto w = adaptive_penalty_weights(series.t(), series.x(), eta, velocity_floor);
  return assemble_penalty(series.t(), w);
}

/// Diagonal and linear terms of the monotonicity penalty
/// mu / h_i [(theta_v,i - s_i)^2 + (theta_v,i+1 - s_i)^2], constant dropped.
struct MonotonicityPenalty {
  std::vector<double> diagonal;  // length 2n
  std::vector<double> linear;    // length 2n
};

inline MonotonicityPenalty assemble_monotonicity_penalty(std::span<const double> t,
                                                         std::span<const double> secants,
                                                         double mu) {
  detail::require(secants.size() + 1 == t.size(), ErrorKind::invalid_argument,
                  "monotonicity penalty: need one secant per interval");
  MonotonicityPenalty p{std::vector<double>(2 * t.size(), 0.0),
                        std::vector<double>(2 * t.size(), 0.0)};
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double w = mu / (t[i + 1] - t[i]);
    for (std::size_t idx : {2 * i + 1, 2 * i + 3}) {
      p.diagonal[idx] += w;
      p.linear[idx] += w * secants[i];
    }
  }
  return p;
}

/// Normal equations lhs theta = rhs of a V-SPLINE fit.
struct SplineSystem {
  SymmetricBandMatrix lhs;
  std::vector<double> rhs;
};

/// B'B + gamma C'C + n Omega and B'x + gamma C'v.
inline SplineSystem build_spline_system(std::span<const double> t, std::span<const double> x,
                                        std::span<const double> v,
                                        const SymmetricBandMatrix& omega, double gamma) {
  const std::size_t n = t.size();
  SplineSystem sys{omega, std::vector<double>(2 * n, 0.0)};
  sys.lhs *= static_cast<double>(n);
  std::vector<double> diag(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[2 * i] = 1.0;
    diag[2 * i + 1] = gamma;
    sys.rhs[2 * i] = x[i];
    sys.rhs[2 * i + 1] = gamma * v[i];
  }
  sys.lhs.add_diagonal(diag);
  return sys;
}

inline std::vector<double> solve_spline_system(const SplineSystem& sys, VSplineSolver solver) {
  if (solver == VSplineSolver::banded) return BandCholesky(sys.lhs).solve(sys.rhs);

  const Eigen::MatrixXd a = sys.lhs.to_dense();
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  detail::require(llt.info() == Eigen::Success && llt.rcond() > kSingularPivotRatio,
                  ErrorKind::singular_system, "V-SPLINE: normal matrix is singular");
  const Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), static_cast<Eigen::Index>(sys.rhs.size()));
  const Eigen::VectorXd theta = llt.solve(b);
  return {theta.data(), theta.data() + theta.size()};
}

/// Splits theta into a knot set (positions, velocities).
inline KnotSet theta_knots(std::span<const double> t, std::span<const double> theta) {
  detail::require(theta.size() == 2 * t.size(), ErrorKind::invalid_argument,
                  "theta must hold two values per knot");
  std::vector<double> y(t.size()), m(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    y[i] = theta[2 * i];
    m[i] = theta[2 * i + 1];
  }
  return {std::vector<double>(t.begin(), t.end()), std::move(y), std::move(m)};
}

/// Closed-form V-SPLINE parameters theta*.
inline std::vector<double> vspline_theta(const ObservationSeries& series, const VSplineConfig& cfg) {
  detail::require_fit_input(series, "V-SPLINE");
  detail::require_velocity(series, "V-SPLINE");
  cfg.validate();
  const auto omega = assemble_penalty(series, cfg.eta, cfg.velocity_floor);
  const auto sys = build_spline_system(series.t(), series.x(), series.v(), omega, cfg.gamma);
  return solve_spline_system(sys, cfg.solver);
}

/// Not monotone.
inline TrajectoryModel fit_vspline(const ObservationSeries& series, const VSplineConfig& cfg) {
  KnotSet knots = theta_knots(series.t(), vspline_theta(series, cfg));
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {Method::vspline, std::move(pieces), std::move(knots)};
}

/// Observed velocities after the Fritsch–Carlson projection used as the
/// first stage of V-SPLINE-MP.
inline std::vector<double> projected_velocities(const ObservationSeries& series,
                                                double epsilon = kDefaultFlatEpsilon) {
  const KnotSet k = vchip_me_knots(series.t(), series.x(), series.v(), epsilon);
  return {k.m().begin(), k.m().end()};
}

/// theta* of the monotonicity-penalised objective
/// |B theta - x|^2 + gamma |C theta - u|^2 + n theta' Omega theta
///   + theta' Omega_mono theta - 2 b_mono' theta.
inline std::vector<double> vspline_mp_theta(const ObservationSeries& series,
                                            const VSplineConfig& cfg,
                                            double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "V-SPLINE-MP");
  detail::require_velocity(series, "V-SPLINE-MP");
  detail::require_monotone_positions(series.x(), "V-SPLINE-MP");
  cfg.validate();
  const auto u = projected_velocities(series, epsilon);
  const auto omega = assemble_penalty(series, cfg.eta, cfg.velocity_floor);
  auto sys = build_spline_system(series.t(), series.x(), u, omega, cfg.gamma);
  const auto secants = secant_slopes(series);
  const auto mono = assemble_monotonicity_penalty(series.t(), secants, cfg.mu);
  sys.lhs.add_diagonal(mono.diagonal);
  for (std::size_t i = 0; i < sys.rhs.size(); ++i) sys.rhs[i] += mono.linear[i];
  return solve_spline_system(sys, cfg.solver);
}

/// Near-monotone; not guaranteed.
inline TrajectoryModel fit_vspline_mp(const ObservationSeries& series, const VSplineConfig& cfg,
                                      double epsilon = kDefaultFlatEpsilon) {
  KnotSet knots = theta_knots(series.t(), vspline_mp_theta(series, cfg, epsilon));
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {Method::vspline_mp, std::move(pieces), std::move(knots)};
}

/// V-SPLINE smoothing, monotone repair of the smoothed knots, then the
/// VCHIP-ME construction. Always monotone.
inline TrajectoryModel fit_vspline_me(const ObservationSeries& series, const VSplineConfig& cfg,
                                      double epsilon = kDefaultFlatEpsilon) {
  const KnotSet smoothed = theta_knots(series.t(), vspline_theta(series, cfg));
  const auto repaired = repair_monotone_knots(smoothed.t(), smoothed.y(), smoothed.m());
  return detail::monotone_hermite_model(Method::vspline_me, series.t(), repaired.y, repaired.u,
                                        epsilon);
}

}  // namespace avltraj
