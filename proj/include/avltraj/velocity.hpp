#pragma once

// Velocity-aware reconstruction without global smoothing: LVMI, VCHIP,
// VCHIP-ME, PCHIP-VCHIP, LOCREG-V, LOCREG-PCHIP-V.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/local_regression.hpp"
#include "avltraj/model.hpp"
#include "avltraj/position.hpp"

namespace avltraj {

struct BlendConfig {
  double alpha = 0.5;

  void validate() const {
    detail::require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::invalid_argument,
                    "blend weight alpha must lie in [0, 1]");
  }
};

struct BiLocregConfig {
  std::size_t k_x = 7;
  std::size_t k_v = 7;

  void validate(std::size_t n) const {
    LocregConfig{k_x}.validate(n);
    LocregConfig{k_v}.validate(n);
  }
};

inline constexpr double kParallelVelocityTolerance = 1e-9;

namespace detail {

inline void require_velocity(const ObservationSeries& series, std::string_view method) {
  require(series.has_velocity(), ErrorKind::missing_velocity,
          std::string(method) + ": trip '" + series.trip_id() + "' carries no velocity column");
}

inline std::vector<double> clamp_nonnegative(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::max(x, 0.0);
  return out;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace detail

/// Two lines per interval anchored at the endpoints with the observed
/// velocities. The switch happens where the lines cross when that lies inside
/// the interval, otherwise at the midpoint (each half uses its nearest
/// endpoint's line).
inline TrajectoryModel fit_lvmi(const ObservationSeries& series) {
  detail::require_fit_input(series, "LVMI");
  detail::require_velocity(series, "LVMI");
  const auto t = series.t();
  const auto x = series.x();
  const auto v = series.v();

  std::vector<double> breaks{t.front()};
  std::vector<PiecewiseCubic::Coefficients> coeffs;
  std::vector<double> kinks;
  auto push_line = [&](double t0, double t1, double anchor_t, double anchor_x, double slope) {
    if (t1 <= t0) return;
    coeffs.push_back({anchor_x + slope * (t0 - anchor_t), slope, 0.0, 0.0});
    breaks.push_back(t1);
  };

  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double t0 = t[i], t1 = t[i + 1];
    double t_switch = 0.5 * (t0 + t1);
    if (std::abs(v[i + 1] - v[i]) >= kParallelVelocityTolerance) {
      const double t_int = (x[i] - x[i + 1] + v[i + 1] * t1 - v[i] * t0) / (v[i + 1] - v[i]);
      if (t_int >= t0 && t_int <= t1) t_switch = t_int;
    }
    push_line(t0, t_switch, t0, x[i], v[i]);
    push_line(t_switch, t1, t1, x[i + 1], v[i + 1]);
    // Pin the interval end exactly on the sample.
    breaks.back() = t1;
  }
  for (std::size_t p = 1; p + 1 < breaks.size(); ++p) {
    if (coeffs[p][1] != coeffs[p - 1][1]) kinks.push_back(breaks[p]);
  }
  return {Method::lvmi, PiecewiseCubic(std::move(breaks), std::move(coeffs), std::move(kinks))};
}

/// Hermite cubic per interval matching observed positions and velocities.
/// Not monotone.
inline TrajectoryModel fit_vchip(const ObservationSeries& series) {
  detail::require_fit_input(series, "VCHIP");
  detail::require_velocity(series, "VCHIP");
  KnotSet knots(detail::to_vector(series.t()), detail::to_vector(series.x()),
                detail::to_vector(series.v()));
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {Method::vchip, std::move(pieces), std::move(knots)};
}

/// Monotone Hermite knots with tangents initialised to the given velocities
/// (negative values floored at 0) and then Fritsch–Carlson constrained.
inline KnotSet vchip_me_knots(std::span<const double> t, std::span<const double> y,
                              std::span<const double> v, double epsilon = kDefaultFlatEpsilon) {
  KnotSet init(detail::to_vector(t), detail::to_vector(y), detail::clamp_nonnegative(v));
  return fritsch_carlson_constrain(init, epsilon);
}

namespace detail {

inline TrajectoryModel monotone_hermite_model(Method method, std::span<const double> t,
                                              std::span<const double> y, std::span<const double> v,
                                              double epsilon) {
  KnotSet knots = vchip_me_knots(t, y, v, epsilon);
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {method, std::move(pieces), std::move(knots)};
}

}  // namespace detail

inline TrajectoryModel fit_vchip_me(const ObservationSeries& series,
                                    double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "VCHIP-ME");
  detail::require_velocity(series, "VCHIP-ME");
  detail::require_monotone_positions(series.x(), "VCHIP-ME");
  return detail::monotone_hermite_model(Method::vchip_me, series.t(), series.x(), series.v(),
                                        epsilon);
}

/// Blend of PCHIP tangents and observed velocities, alpha weighting the
/// observations, run through the VCHIP-ME construction.
inline std::vector<double> blended_velocities(const ObservationSeries& series,
                                              const BlendConfig& cfg,
                                              double epsilon = kDefaultFlatEpsilon) {
  cfg.validate();
  const KnotSet pchip = pchip_knots(series.t(), series.x(), epsilon);
  const auto v = detail::clamp_nonnegative(series.v());
  const auto u = pchip.m();
  std::vector<double> blended(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    blended[i] = cfg.alpha * v[i] + (1.0 - cfg.alpha) * u[i];
  }
  return blended;
}

inline TrajectoryModel fit_pchip_vchip(const ObservationSeries& series, const BlendConfig& cfg,
                                       double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "PCHIP-VCHIP");
  detail::require_velocity(series, "PCHIP-VCHIP");
  detail::require_monotone_positions(series.x(), "PCHIP-VCHIP");
  const auto blended = blended_velocities(series, cfg, epsilon);
  return detail::monotone_hermite_model(Method::pchip_vchip, series.t(), series.x(), blended,
                                        epsilon);
}

/// Independent local regressions of position and velocity. Velocity is read
/// from its own smoother, so it is not the derivative of position.
inline TrajectoryModel fit_locreg_v(const ObservationSeries& series, const BiLocregConfig& cfg) {
  detail::require_fit_input(series, "LOCREG-V");
  detail::require_velocity(series, "LOCREG-V");
  cfg.validate(series.size());
  LocalRegression pos(detail::to_vector(series.t()), detail::to_vector(series.x()),
                      LocregConfig{cfg.k_x});
  LocalRegression vel(detail::to_vector(series.t()), detail::to_vector(series.v()),
                      LocregConfig{cfg.k_v});
  return {Method::locreg_v, LocregCurve(std::move(pos), std::move(vel))};
}

/// Positions and velocities after monotone repair of smoothed knots.
struct RepairedKnots {
  std::vector<double> y;
  std::vector<double> u;
  std::vector<std::size_t> corrected;  // indices whose position was raised
};

/// Running-maximum correction of smoothed positions. Velocities at corrected
/// interior indices are replaced by the central secant of the corrected
/// positions, floored at 0; other velocities pass through.
inline RepairedKnots repair_monotone_knots(std::span<const double> t,
                                           std::span<const double> smoothed_x,
                                           std::span<const double> smoothed_v) {
  detail::require(t.size() == smoothed_x.size() && t.size() == smoothed_v.size(),
                  ErrorKind::invalid_argument, "repair_monotone_knots: length mismatch");
  RepairedKnots out;
  out.y = monotone_correct(smoothed_x);
  out.u.assign(smoothed_v.begin(), smoothed_v.end());
  const std::size_t n = t.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (smoothed_x[i] < out.y[i - 1]) out.corrected.push_back(i);
  }
  for (std::size_t i : out.corrected) {
    if (i + 1 < n) {
      out.u[i] = std::max((out.y[i + 1] - out.y[i - 1]) / (t[i + 1] - t[i - 1]), 0.0);
    }
  }
  return out;
}

inline TrajectoryModel fit_locreg_pchip_v(const ObservationSeries& series,
                                          const BiLocregConfig& cfg,
                                          double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "LOCREG-PCHIP-V");
  detail::require_velocity(series, "LOCREG-PCHIP-V");
  cfg.validate(series.size());
  const auto tv = detail::to_vector(series.t());
  const LocalRegression pos(tv, detail::to_vector(series.x()), LocregConfig{cfg.k_x});
  const LocalRegression vel(tv, detail::to_vector(series.v()), LocregConfig{cfg.k_v});
  std::vector<double> sx(tv.size()), sv(tv.size());
  for (std::size_t i = 0; i < tv.size(); ++i) {
    sx[i] = pos.value(tv[i]);
    sv[i] = vel.value(tv[i]);
  }
  const auto repaired = repair_monotone_knots(tv, sx, sv);
  return detail::monotone_hermite_model(Method::locreg_pchip_v, tv, repaired.y, repaired.u,
                                        epsilon);
}

}  // namespace avltraj
