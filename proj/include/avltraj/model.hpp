#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "avltraj/core.hpp"
#include "avltraj/local_regression.hpp"

namespace avltraj {

/// Piecewise polynomial of degree <= 3. Piece i covers [breaks[i], breaks[i+1])
/// and evaluates c0 + c1 tau + c2 tau^2 + c3 tau^3 with tau = t - breaks[i].
/// Breaks where the velocity jumps (piecewise-linear methods) are listed in
/// `velocity_breaks`; acceleration is undefined there.
class PiecewiseCubic {
 public:
  using Coefficients = std::array<double, 4>;

  PiecewiseCubic() = default;

  PiecewiseCubic(std::vector<double> breaks, std::vector<Coefficients> coeffs,
                 std::vector<double> velocity_breaks = {})
      : breaks_(std::move(breaks)),
        coeffs_(std::move(coeffs)),
        velocity_breaks_(std::move(velocity_breaks)) {
    detail::require(breaks_.size() >= 2 && coeffs_.size() + 1 == breaks_.size(),
                    ErrorKind::invalid_argument, "piecewise cubic: need one piece per break interval");
    detail::require_strictly_increasing(breaks_, "piecewise cubic breaks");
  }

  /// Cubic Hermite spline through the knots in power form.
  static PiecewiseCubic from_knots(const KnotSet& knots) {
    detail::require(knots.size() >= 2, ErrorKind::invalid_argument,
                    "piecewise cubic: need at least 2 knots");
    const auto t = knots.t();
    const auto y = knots.y();
    const auto m = knots.m();
    std::vector<Coefficients> coeffs(knots.size() - 1);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const double h = t[i + 1] - t[i];
      const double delta = (y[i + 1] - y[i]) / h;
      coeffs[i] = {y[i], m[i], (3.0 * delta - 2.0 * m[i] - m[i + 1]) / h,
                   (m[i] + m[i + 1] - 2.0 * delta) / (h * h)};
    }
    return {std::vector<double>(t.begin(), t.end()), std::move(coeffs)};
  }

  [[nodiscard]] std::span<const double> breaks() const noexcept { return breaks_; }
  [[nodiscard]] std::span<const Coefficients> coefficients() const noexcept { return coeffs_; }
  [[nodiscard]] std::span<const double> velocity_breaks() const noexcept { return velocity_breaks_; }
  [[nodiscard]] double t_begin() const { return breaks_.front(); }
  [[nodiscard]] double t_end() const { return breaks_.back(); }

  /// `t` must lie inside the domain.
  [[nodiscard]] Kinematics eval(double t) const {
    const std::size_t i = find_interval(breaks_, t);
    const double tau = t - breaks_[i];
    const auto& c = coeffs_[i];
    return {c[0] + tau * (c[1] + tau * (c[2] + tau * c[3])),
            c[1] + tau * (2.0 * c[2] + 3.0 * tau * c[3]), 2.0 * c[2] + 6.0 * tau * c[3]};
  }

  friend bool operator==(const PiecewiseCubic&, const PiecewiseCubic&) = default;

 private:
  std::vector<double> breaks_;
  std::vector<Coefficients> coeffs_;
  std::vector<double> velocity_breaks_;
};

/// Trajectory served directly by local regression. Without a velocity channel
/// the velocity is d/dt of the position smoother; with one, velocity and
/// acceleration come from the velocity smoother.
class LocregCurve {
 public:
  static constexpr double kAccelStep = 1e-4;

  LocregCurve(LocalRegression position, std::optional<LocalRegression> velocity = std::nullopt)
      : position_(std::move(position)), velocity_(std::move(velocity)) {}

  [[nodiscard]] const LocalRegression& position() const noexcept { return position_; }
  [[nodiscard]] const std::optional<LocalRegression>& velocity() const noexcept { return velocity_; }
  [[nodiscard]] double t_begin() const { return position_.t_begin(); }
  [[nodiscard]] double t_end() const { return position_.t_end(); }

  [[nodiscard]] Kinematics eval(double t) const {
    const LocalFit pos = position_.fit(t);
    if (velocity_) {
      const LocalFit vel = velocity_->fit(t);
      return {pos.value, vel.value, vel.total_derivative};
    }
    return {pos.value, pos.total_derivative, acceleration_by_difference(t)};
  }

 private:
  double acceleration_by_difference(double t) const {
    const double lo = std::max(t - kAccelStep, t_begin());
    const double hi = std::min(t + kAccelStep, t_end());
    if (hi <= lo) return 0.0;
    return (position_.fit(hi).total_derivative - position_.fit(lo).total_derivative) / (hi - lo);
  }

  LocalRegression position_;
  std::optional<LocalRegression> velocity_;
};

/// Immutable fitted trajectory, queryable for position, velocity and
/// acceleration anywhere on its domain.
class TrajectoryModel {
 public:
  using Representation = std::variant<PiecewiseCubic, LocregCurve>;

  TrajectoryModel(Method method, Representation repr, std::optional<KnotSet> knots = std::nullopt)
      : method_(method), repr_(std::move(repr)), knots_(std::move(knots)) {}

  [[nodiscard]] Method method() const noexcept { return method_; }
  [[nodiscard]] const Representation& representation() const noexcept { return repr_; }
  /// Knots the Hermite pieces were built from, for spline-based methods.
  [[nodiscard]] const std::optional<KnotSet>& knots() const noexcept { return knots_; }

  [[nodiscard]] const PiecewiseCubic* piecewise() const noexcept {
    return std::get_if<PiecewiseCubic>(&repr_);
  }

  [[nodiscard]] double t_begin() const {
    return std::visit([](const auto& r) { return r.t_begin(); }, repr_);
  }
  [[nodiscard]] double t_end() const {
    return std::visit([](const auto& r) { return r.t_end(); }, repr_);
  }

  /// Times where velocity jumps and acceleration is undefined.
  [[nodiscard]] std::span<const double> velocity_breaks() const noexcept {
    if (const auto* pc = piecewise()) return pc->velocity_breaks();
    return {};
  }

  [[nodiscard]] Kinematics at(double t, DomainPolicy policy = DomainPolicy::clamp) const {
    const double lo = t_begin();
    const double hi = t_end();
    if (t < lo || t > hi) {
      detail::require(policy == DomainPolicy::clamp, ErrorKind::out_of_domain,
                      "trajectory query at t=" + std::to_string(t) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
      const double tc = t < lo ? lo : hi;
      return {std::visit([tc](const auto& r) { return r.eval(tc).x; }, repr_), 0.0, 0.0};
    }
    return std::visit([t](const auto& r) { return r.eval(t); }, repr_);
  }

  [[nodiscard]] double position(double t) const { return at(t).x; }
  [[nodiscard]] double velocity(double t) const { return at(t).v; }
  [[nodiscard]] double acceleration(double t) const { return at(t).a; }

 private:
  Method method_;
  Representation repr_;
  std::optional<KnotSet> knots_;
};

/// Uniform grid t_begin, t_begin + dt, ... plus t_end when it is not on the grid.
inline std::vector<double> time_grid(double t_begin, double t_end, double dt) {
  detail::require(dt > 0.0, ErrorKind::invalid_argument, "grid step must be positive");
  std::vector<double> grid;
  if (t_end < t_begin) return grid;
  const auto steps = static_cast<std::size_t>(std::floor((t_end - t_begin) / dt + 1e-9));
  grid.reserve(steps + 2);
  for (std::size_t k = 0; k <= steps; ++k) grid.push_back(t_begin + static_cast<double>(k) * dt);
  if (t_end - grid.back() > 1e-9) grid.push_back(t_end);
  return grid;
}

inline constexpr double kBreakpointOffset = 1e-6;

/// Moves grid points that sit on a velocity discontinuity by 1e-6 s so that
/// acceleration is read on an open segment.
inline double offset_from_breaks(const TrajectoryModel& model, double t) {
  const auto vb = model.velocity_breaks();
  if (vb.empty()) return t;
  auto it = std::lower_bound(vb.begin(), vb.end(), t - 1e-9);
  if (it != vb.end() && std::abs(*it - t) <= 1e-9) {
    const double shifted = t + kBreakpointOffset;
    return shifted <= model.t_end() ? shifted : t - kBreakpointOffset;
  }
  return t;
}

/// True when x(t) never drops by more than `tol` between consecutive points of
/// a `dt` grid.
inline bool is_monotone_on_grid(const TrajectoryModel& model, double dt, double tol) {
  const auto grid = time_grid(model.t_begin(), model.t_end(), dt);
  double prev = model.position(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double x = model.position(grid[i]);
    if (x < prev - tol) return false;
    prev = x;
  }
  return true;
}

}  // namespace avltraj
