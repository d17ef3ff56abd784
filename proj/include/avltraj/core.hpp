#pragma once

// Shared domain types and the cubic Hermite machinery every reconstruction
// method builds on. Units throughout: seconds, feet, feet/second.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace avltraj {

enum class ErrorKind {
  invalid_argument,
  non_monotone,
  out_of_domain,
  singular_system,
  missing_velocity,
  parse_error,
  io_error,
  unknown_method,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::non_monotone: return "non_monotone";
    case ErrorKind::out_of_domain: return "out_of_domain";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::missing_velocity: return "missing_velocity";
    case ErrorKind::parse_error: return "parse_error";
    case ErrorKind::io_error: return "io_error";
    case ErrorKind::unknown_method: return "unknown_method";
  }
  return "unknown";
}

/// Contract violation raised by any library operation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

inline void require_strictly_increasing(std::span<const double> t, std::string_view what) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(t[i]), ErrorKind::invalid_argument,
            std::string(what) + ": non-finite time at index " + std::to_string(i));
    if (i > 0) {
      require(t[i] > t[i - 1], ErrorKind::invalid_argument,
              std::string(what) + ": times not strictly increasing at index " + std::to_string(i));
    }
  }
}

inline void require_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), ErrorKind::invalid_argument,
            std::string(what) + ": non-finite value at index " + std::to_string(i));
  }
}

inline bool is_nondecreasing(std::span<const double> values) {
  return std::is_sorted(values.begin(), values.end());
}

}  // namespace detail

// ─── ObservationSeries ──────────────────────────────────────────────────────

/// Time-ordered AVL samples of one trip. Velocity is either present for every
/// sample or for none.
class ObservationSeries {
 public:
  ObservationSeries() = default;

  ObservationSeries(std::string trip_id, std::vector<double> t, std::vector<double> x,
                    std::vector<double> v = {}, std::vector<std::uint8_t> stopped = {})
      : trip_id_(std::move(trip_id)),
        t_(std::move(t)),
        x_(std::move(x)),
        v_(std::move(v)),
        stopped_(std::move(stopped)) {
    detail::require(x_.size() == t_.size(), ErrorKind::invalid_argument,
                    "series '" + trip_id_ + "': t and x lengths differ");
    detail::require(v_.empty() || v_.size() == t_.size(), ErrorKind::invalid_argument,
                    "series '" + trip_id_ + "': velocity must be given for all samples or none");
    if (stopped_.empty()) stopped_.assign(t_.size(), 0);
    detail::require(stopped_.size() == t_.size(), ErrorKind::invalid_argument,
                    "series '" + trip_id_ + "': stopped flag length differs");
    detail::require_strictly_increasing(t_, "series '" + trip_id_ + "'");
    detail::require_finite(x_, "series '" + trip_id_ + "' positions");
    detail::require_finite(v_, "series '" + trip_id_ + "' velocities");
  }

  [[nodiscard]] const std::string& trip_id() const noexcept { return trip_id_; }
  [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
  [[nodiscard]] bool empty() const noexcept { return t_.empty(); }
  [[nodiscard]] bool has_velocity() const noexcept { return !v_.empty() && !t_.empty(); }

  [[nodiscard]] std::span<const double> t() const noexcept { return t_; }
  [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
  [[nodiscard]] std::span<const double> v() const noexcept { return v_; }
  [[nodiscard]] std::span<const std::uint8_t> stopped() const noexcept { return stopped_; }

  [[nodiscard]] double t_begin() const { return t_.front(); }
  [[nodiscard]] double t_end() const { return t_.back(); }

  /// Samples at the given (increasing) indices.
  [[nodiscard]] ObservationSeries subset(std::span<const std::size_t> indices) const {
    std::vector<double> t, x, v;
    std::vector<std::uint8_t> stopped;
    t.reserve(indices.size());
    x.reserve(indices.size());
    stopped.reserve(indices.size());
    if (has_velocity()) v.reserve(indices.size());
    for (std::size_t i : indices) {
      detail::require(i < size(), ErrorKind::invalid_argument, "subset index out of range");
      t.push_back(t_[i]);
      x.push_back(x_[i]);
      if (has_velocity()) v.push_back(v_[i]);
      stopped.push_back(stopped_[i]);
    }
    return {trip_id_, std::move(t), std::move(x), std::move(v), std::move(stopped)};
  }

  [[nodiscard]] ObservationSeries with_positions(std::vector<double> x) const {
    return {trip_id_, t_, std::move(x), v_, stopped_};
  }

  [[nodiscard]] ObservationSeries with_velocities(std::vector<double> v) const {
    return {trip_id_, t_, x_, std::move(v), stopped_};
  }

  [[nodiscard]] ObservationSeries without_velocity() const {
    return {trip_id_, t_, x_, {}, stopped_};
  }

  friend bool operator==(const ObservationSeries&, const ObservationSeries&) = default;

 private:
  std::string trip_id_;
  std::vector<double> t_;
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<std::uint8_t> stopped_;
};

// ─── KnotSet ────────────────────────────────────────────────────────────────

/// Position value and tangent at each knot of a cubic Hermite spline.
class KnotSet {
 public:
  KnotSet() = default;

  KnotSet(std::vector<double> t, std::vector<double> y, std::vector<double> m)
      : t_(std::move(t)), y_(std::move(y)), m_(std::move(m)) {
    detail::require(t_.size() == y_.size() && t_.size() == m_.size(),
                    ErrorKind::invalid_argument, "knot set: t, y, m lengths differ");
    detail::require_strictly_increasing(t_, "knot set");
    detail::require_finite(y_, "knot set values");
    detail::require_finite(m_, "knot set tangents");
  }

  [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
  [[nodiscard]] bool empty() const noexcept { return t_.empty(); }
  [[nodiscard]] std::span<const double> t() const noexcept { return t_; }
  [[nodiscard]] std::span<const double> y() const noexcept { return y_; }
  [[nodiscard]] std::span<const double> m() const noexcept { return m_; }

  [[nodiscard]] KnotSet with_tangents(std::vector<double> m) const { return {t_, y_, std::move(m)}; }

  friend bool operator==(const KnotSet&, const KnotSet&) = default;

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> m_;
};

/// Position, velocity and acceleration at one instant.
struct Kinematics {
  double x = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// What a query outside [t_1, t_n] does: clamp returns the endpoint position
/// with zero velocity and acceleration, error throws.
enum class DomainPolicy { clamp, error };

// ─── Hermite basis ──────────────────────────────────────────────────────────

namespace hermite {

inline double h00(double s) { return (2.0 * s - 3.0) * s * s + 1.0; }
inline double h10(double s) { return ((s - 2.0) * s + 1.0) * s; }
inline double h01(double s) { return (-2.0 * s + 3.0) * s * s; }
inline double h11(double s) { return (s - 1.0) * s * s; }

inline double dh00(double s) { return 6.0 * s * s - 6.0 * s; }
inline double dh10(double s) { return 3.0 * s * s - 4.0 * s + 1.0; }
inline double dh01(double s) { return -6.0 * s * s + 6.0 * s; }
inline double dh11(double s) { return 3.0 * s * s - 2.0 * s; }

inline double ddh00(double s) { return 12.0 * s - 6.0; }
inline double ddh10(double s) { return 6.0 * s - 4.0; }
inline double ddh01(double s) { return -12.0 * s + 6.0; }
inline double ddh11(double s) { return 6.0 * s - 2.0; }

}  // namespace hermite

/// Index of the interval [t_i, t_{i+1}) containing `t`; the last interval is
/// closed. `t` must lie inside [t.front(), t.back()].
inline std::size_t find_interval(std::span<const double> t, double tq) {
  auto it = std::upper_bound(t.begin(), t.end(), tq);
  auto i = static_cast<std::size_t>(std::distance(t.begin(), it));
  if (i == 0) return 0;
  return std::min(i - 1, t.size() - 2);
}

/// Cubic Hermite value and first two derivatives at `tq`.
inline Kinematics hermite_eval(const KnotSet& knots, double tq,
                               DomainPolicy policy = DomainPolicy::clamp) {
  detail::require(!knots.empty(), ErrorKind::invalid_argument, "hermite_eval: empty knot set");
  const auto t = knots.t();
  const auto y = knots.y();
  const auto m = knots.m();
  if (tq < t.front() || tq > t.back()) {
    detail::require(policy == DomainPolicy::clamp, ErrorKind::out_of_domain,
                    "hermite_eval: query time " + std::to_string(tq) + " outside [" +
                        std::to_string(t.front()) + ", " + std::to_string(t.back()) + "]");
    return {tq < t.front() ? y.front() : y.back(), 0.0, 0.0};
  }
  if (knots.size() == 1) return {y.front(), m.front(), 0.0};

  const std::size_t i = find_interval(t, tq);
  const double h = t[i + 1] - t[i];
  const double s = (tq - t[i]) / h;
  using namespace hermite;
  Kinematics k;
  k.x = h00(s) * y[i] + h10(s) * h * m[i] + h01(s) * y[i + 1] + h11(s) * h * m[i + 1];
  k.v = (dh00(s) * y[i] + dh01(s) * y[i + 1]) / h + dh10(s) * m[i] + dh11(s) * m[i + 1];
  k.a = (ddh00(s) * y[i] + ddh01(s) * y[i + 1]) / (h * h) +
        (ddh10(s) * m[i] + ddh11(s) * m[i + 1]) / h;
  return k;
}

// ─── Slopes and monotone corrections ────────────────────────────────────────

/// Secant slope of each interval, (x_{i+1} - x_i) / (t_{i+1} - t_i).
inline std::vector<double> secant_slopes(std::span<const double> t, std::span<const double> x) {
  detail::require(t.size() == x.size() && t.size() >= 2, ErrorKind::invalid_argument,
                  "secant_slopes: need at least 2 samples");
  std::vector<double> delta(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    delta[i] = (x[i + 1] - x[i]) / (t[i + 1] - t[i]);
  }
  return delta;
}

inline std::vector<double> secant_slopes(const ObservationSeries& series) {
  return secant_slopes(series.t(), series.x());
}

/// Running maximum: the smallest nondecreasing sequence that dominates the input.
inline std::vector<double> monotone_correct(std::span<const double> values) {
  detail::require(!values.empty(), ErrorKind::invalid_argument, "monotone_correct: empty input");
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
  return out;
}

inline constexpr double kDefaultFlatEpsilon = 1e-8;

/// Fritsch–Carlson tangent constraint. Sweeps the intervals left to right:
/// nearly flat intervals (|delta| < epsilon) get both endpoint tangents zeroed,
/// otherwise the pair (alpha, beta) = (m_k, m_{k+1}) / delta_k is pulled onto
/// the circle alpha^2 + beta^2 = 9 when it lies outside. Negative tangents are
/// floored at zero first. The Hermite spline through the result is
/// nondecreasing.
inline KnotSet fritsch_carlson_constrain(const KnotSet& knots,
                                         double epsilon = kDefaultFlatEpsilon) {
  detail::require(knots.size() >= 2, ErrorKind::invalid_argument,
                  "fritsch_carlson_constrain: need at least 2 knots");
  detail::require(detail::is_nondecreasing(knots.y()), ErrorKind::non_monotone,
                  "fritsch_carlson_constrain: knot values decrease; apply monotone correction first");
  const auto delta = secant_slopes(knots.t(), knots.y());
  std::vector<double> m(knots.m().begin(), knots.m().end());
  for (double& mi : m) mi = std::max(mi, 0.0);

  for (std::size_t k = 0; k < delta.size(); ++k) {
    if (std::abs(delta[k]) < epsilon) {
      m[k] = 0.0;
      m[k + 1] = 0.0;
      continue;
    }
    const double alpha = m[k] / delta[k];
    const double beta = m[k + 1] / delta[k];
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m[k] = tau * alpha * delta[k];
      m[k + 1] = tau * beta * delta[k];
    }
  }
  return knots.with_tangents(std::move(m));
}

/// Tangent initialisation of monotone PCHIP: one-sided secants at the ends,
/// the mean of adjacent secants inside.
inline std::vector<double> pchip_initial_tangents(std::span<const double> t,
                                                  std::span<const double> x) {
  const auto delta = secant_slopes(t, x);
  const std::size_t n = t.size();
  std::vector<double> m(n);
  m.front() = delta.front();
  m.back() = delta.back();
  for (std::size_t i = 1; i + 1 < n; ++i) m[i] = 0.5 * (delta[i - 1] + delta[i]);
  return m;
}

// ─── Seeding ────────────────────────────────────────────────────────────────

/// Per-trip seed: FNV-1a of the trip id folded into the global seed, so results
/// do not depend on the order trips are processed in.
inline std::uint64_t trip_seed(std::uint64_t seed, std::string_view trip_id) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (unsigned char c : trip_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finaliser
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

// ─── Method names ───────────────────────────────────────────────────────────

enum class Method {
  lseg,
  pchip,
  locreg,
  locreg_pchip,
  lvmi,
  vchip,
  vchip_me,
  pchip_vchip,
  locreg_v,
  locreg_pchip_v,
  vspline,
  vspline_mp,
  vspline_me,
};

inline constexpr std::array<Method, 13> kAllMethods = {
    Method::lseg,     Method::pchip,       Method::locreg,   Method::locreg_pchip,
    Method::lvmi,     Method::vchip,       Method::vchip_me, Method::pchip_vchip,
    Method::locreg_v, Method::locreg_pchip_v, Method::vspline, Method::vspline_mp,
    Method::vspline_me,
};

inline std::string_view to_string(Method method) {
  switch (method) {
    case Method::lseg: return "LSEG";
    case Method::pchip: return "PCHIP";
    case Method::locreg: return "LOCREG";
    case Method::locreg_pchip: return "LOCREG-PCHIP";
    case Method::lvmi: return "LVMI";
    case Method::vchip: return "VCHIP";
    case Method::vchip_me: return "VCHIP-ME";
    case Method::pchip_vchip: return "PCHIP-VCHIP";
    case Method::locreg_v: return "LOCREG-V";
    case Method::locreg_pchip_v: return "LOCREG-PCHIP-V";
    case Method::vspline: return "V-SPLINE";
    case Method::vspline_mp: return "V-SPLINE-MP";
    case Method::vspline_me: return "V-SPLINE-ME";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

/// Properties of each method as tabulated for the method family.
struct MethodTraits {
  bool monotone;        // output guaranteed nondecreasing
  bool cubic;           // built from cubic pieces
  bool differentiable;  // velocity continuous
  bool smoothing;       // absorbs measurement error
  bool uses_velocity;
  int parameters;
};

inline constexpr MethodTraits traits(Method method) {
  switch (method) {
    case Method::lseg: return {true, false, false, false, false, 0};
    case Method::pchip: return {true, true, true, false, false, 0};
    case Method::locreg: return {false, false, false, true, false, 1};
    case Method::locreg_pchip: return {true, true, true, true, false, 1};
    case Method::lvmi: return {false, false, false, false, true, 0};
    case Method::vchip: return {false, true, true, false, true, 0};
    case Method::vchip_me: return {true, true, true, false, true, 0};
    case Method::pchip_vchip: return {true, true, true, false, true, 1};
    case Method::locreg_v: return {false, false, false, true, true, 2};
    case Method::locreg_pchip_v: return {true, true, true, true, true, 2};
    case Method::vspline: return {false, true, true, true, true, 2};
    case Method::vspline_mp: return {false, true, true, true, true, 3};
    case Method::vspline_me: return {true, true, true, true, true, 2};
  }
  return {};
}

}  // namespace avltraj
