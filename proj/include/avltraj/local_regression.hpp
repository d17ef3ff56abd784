#pragma once

// k-nearest-neighbour local cubic regression with tricube weights.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "avltraj/core.hpp"

namespace avltraj {

/// Tricube kernel (1 - |u|^3)^3 on |u| <= 1, zero outside.
inline double tricube(double u) {
  const double au = std::abs(u);
  if (au >= 1.0) return 0.0;
  const double c = 1.0 - au * au * au;
  return c * c * c;
}

/// d/du of the tricube kernel.
inline double tricube_derivative(double u) {
  const double au = std::abs(u);
  if (au >= 1.0) return 0.0;
  const double c = 1.0 - au * au * au;
  return -9.0 * u * au * c * c;
}

struct LocregConfig {
  std::size_t k = 7;
  int degree = 3;

  void validate(std::size_t n) const {
    detail::require(degree == 3, ErrorKind::invalid_argument, "local regression degree is fixed at 3");
    detail::require(k >= static_cast<std::size_t>(degree) + 1, ErrorKind::invalid_argument,
                    "local regression: k=" + std::to_string(k) + " below degree+1");
    detail::require(k <= n, ErrorKind::invalid_argument,
                    "local regression: k=" + std::to_string(k) + " exceeds sample count " +
                        std::to_string(n));
  }
};

/// max(7, ceil(0.05 n)), capped at n.
inline std::size_t default_neighborhood(std::size_t n) {
  const auto five_pct = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n)));
  return std::min(n, std::max<std::size_t>(7, five_pct));
}

/// Result of one local fit at a query time.
struct LocalFit {
  double value = 0.0;
  /// Derivative of the locally fitted polynomial at the query time.
  double local_slope = 0.0;
  /// d/dt of `value` as a function of the query time, including the change of
  /// the kernel weights with the query point.
  double total_derivative = 0.0;
  int degree = 3;
};

/// Local regression smoother over one channel (positions or velocities).
/// Each query re-solves its own weighted least-squares problem; nothing is
/// cached between queries.
class LocalRegression {
 public:
  LocalRegression() = default;

  LocalRegression(std::vector<double> t, std::vector<double> y, LocregConfig cfg)
      : t_(std::move(t)), y_(std::move(y)), cfg_(cfg) {
    detail::require(t_.size() == y_.size(), ErrorKind::invalid_argument,
                    "local regression: t and y lengths differ");
    detail::require_strictly_increasing(t_, "local regression");
    cfg_.validate(t_.size());
  }

  [[nodiscard]] const LocregConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::span<const double> t() const noexcept { return t_; }
  [[nodiscard]] std::span<const double> y() const noexcept { return y_; }
  [[nodiscard]] double t_begin() const { return t_.front(); }
  [[nodiscard]] double t_end() const { return t_.back(); }

  [[nodiscard]] LocalFit fit(double tq) const {
    detail::require(tq >= t_.front() && tq <= t_.back(), ErrorKind::out_of_domain,
                    "local regression: query time outside sample range");
    const std::size_t n = t_.size();
    const std::size_t k = cfg_.k;

    // The k nearest samples of a sorted sequence are contiguous.
    auto it = std::lower_bound(t_.begin(), t_.end(), tq);
    std::size_t hi = static_cast<std::size_t>(std::distance(t_.begin(), it));
    std::size_t lo = hi;
    while (hi - lo < k) {
      if (lo == 0) {
        ++hi;
      } else if (hi == n) {
        --lo;
      } else if (tq - t_[lo - 1] <= t_[hi] - tq) {
        --lo;
      } else {
        ++hi;
      }
    }
    const double left = tq - t_[lo];
    const double right = t_[hi - 1] - tq;
    const double h = std::max(left, right);
    const double dh_dt = left >= right ? 1.0 : -1.0;

    using Mat4 = Eigen::Matrix4d;
    using Vec4 = Eigen::Vector4d;
    using MatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
    using VecX = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
    Mat4 a = Mat4::Zero();
    Vec4 b = Vec4::Zero();
    for (std::size_t i = lo; i < hi; ++i) {
      const double u = (t_[i] - tq) / h;
      const double w = tricube(u);
      if (w == 0.0) continue;
      const Vec4 p(1.0, u, u * u, u * u * u);
      a.noalias() += w * p * p.transpose();
      b.noalias() += w * y_[i] * p;
    }

    // Rank-deficient neighbourhoods fall back to the highest supported degree.
    for (int d = cfg_.degree; d >= 0; --d) {
      const int m = d + 1;
      const MatX ad = a.topLeftCorner(m, m);
      Eigen::FullPivLU<MatX> lu(ad);
      lu.setThreshold(1e-10);
      if (lu.rank() < m) continue;
      const VecX beta = lu.solve(VecX(b.head(m)));
      VecX e0 = VecX::Zero(m);
      e0(0) = 1.0;
      const VecX z = lu.solve(e0);

      LocalFit out;
      out.degree = d;
      out.value = beta(0);
      out.local_slope = d >= 1 ? beta(1) / h : 0.0;

      double correction = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double u = (t_[i] - tq) / h;
        const double du_dt = -(1.0 + u * dh_dt) / h;
        const double dw = tricube_derivative(u) * du_dt;
        if (dw == 0.0) continue;
        double fitted = 0.0;
        double hat = 0.0;
        double up = 1.0;
        for (int j = 0; j < m; ++j) {
          fitted += beta(j) * up;
          hat += z(j) * up;
          up *= u;
        }
        correction += hat * dw * (y_[i] - fitted);
      }
      out.total_derivative = out.local_slope + correction;
      return out;
    }
    throw Error(ErrorKind::singular_system, "local regression: no nonzero-weight samples");
  }

  [[nodiscard]] double value(double tq) const { return fit(tq).value; }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  LocregConfig cfg_;
};

}  // namespace avltraj
