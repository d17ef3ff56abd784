#pragma once

// Position-only reconstruction: LSEG, PCHIP, LOCREG, LOCREG-PCHIP.

#include <span>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/local_regression.hpp"
#include "avltraj/model.hpp"

namespace avltraj {

namespace detail {

inline void require_fit_input(const ObservationSeries& series, std::string_view method) {
  require(series.size() >= 2, ErrorKind::invalid_argument,
          std::string(method) + ": need at least 2 samples, trip '" + series.trip_id() + "' has " +
              std::to_string(series.size()));
}

inline void require_monotone_positions(std::span<const double> x, std::string_view method) {
  require(is_nondecreasing(x), ErrorKind::non_monotone,
          std::string(method) + ": positions must be nondecreasing (run preprocessing first)");
}

}  // namespace detail

/// Monotone PCHIP knots through (t, x).
inline KnotSet pchip_knots(std::span<const double> t, std::span<const double> x,
                           double epsilon = kDefaultFlatEpsilon) {
  KnotSet init(std::vector<double>(t.begin(), t.end()), std::vector<double>(x.begin(), x.end()),
               pchip_initial_tangents(t, x));
  return fritsch_carlson_constrain(init, epsilon);
}

/// Straight lines between samples; velocity is the piecewise-constant secant.
inline TrajectoryModel fit_lseg(const ObservationSeries& series) {
  detail::require_fit_input(series, "LSEG");
  detail::require_monotone_positions(series.x(), "LSEG");
  const auto t = series.t();
  const auto x = series.x();
  const auto delta = secant_slopes(series);
  std::vector<PiecewiseCubic::Coefficients> coeffs(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) coeffs[i] = {x[i], delta[i], 0.0, 0.0};
  std::vector<double> kinks(t.begin() + 1, t.end() - 1);
  return {Method::lseg,
          PiecewiseCubic(std::vector<double>(t.begin(), t.end()), std::move(coeffs), std::move(kinks))};
}

inline TrajectoryModel fit_pchip(const ObservationSeries& series,
                                 double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "PCHIP");
  detail::require_monotone_positions(series.x(), "PCHIP");
  KnotSet knots = pchip_knots(series.t(), series.x(), epsilon);
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {Method::pchip, std::move(pieces), std::move(knots)};
}

/// Local cubic regression of positions evaluated at `eval_times`.
inline std::vector<double> locreg_smooth(const ObservationSeries& series, const LocregConfig& cfg,
                                         std::span<const double> eval_times) {
  detail::require_fit_input(series, "LOCREG");
  LocalRegression smoother(std::vector<double>(series.t().begin(), series.t().end()),
                           std::vector<double>(series.x().begin(), series.x().end()), cfg);
  std::vector<double> out;
  out.reserve(eval_times.size());
  for (double t : eval_times) out.push_back(smoother.value(t));
  return out;
}

/// LOCREG re-fits at every query time. Not monotone.
inline TrajectoryModel fit_locreg(const ObservationSeries& series, const LocregConfig& cfg) {
  detail::require_fit_input(series, "LOCREG");
  LocalRegression smoother(std::vector<double>(series.t().begin(), series.t().end()),
                           std::vector<double>(series.x().begin(), series.x().end()), cfg);
  return {Method::locreg, LocregCurve(std::move(smoother))};
}

/// Smooth positions at the sample times, take the running maximum, then fit
/// monotone PCHIP through the corrected points.
inline TrajectoryModel fit_locreg_pchip(const ObservationSeries& series, const LocregConfig& cfg,
                                        double epsilon = kDefaultFlatEpsilon) {
  detail::require_fit_input(series, "LOCREG-PCHIP");
  const auto smoothed = locreg_smooth(series, cfg, series.t());
  const auto y = monotone_correct(smoothed);
  KnotSet knots = pchip_knots(series.t(), y, epsilon);
  auto pieces = PiecewiseCubic::from_knots(knots);
  return {Method::locreg_pchip, std::move(pieces), std::move(knots)};
}

}  // namespace avltraj
