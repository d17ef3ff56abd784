#pragma once

// Symmetric band matrices and their Cholesky factorisation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "avltraj/core.hpp"

namespace avltraj {

/// Symmetric matrix with `bandwidth` sub-diagonals, lower band stored by row:
/// element (i, j), j <= i, i - j <= bandwidth lives at i * (bandwidth + 1) + (i - j).
class SymmetricBandMatrix {
 public:
  SymmetricBandMatrix() = default;
  SymmetricBandMatrix(std::size_t n, std::size_t bandwidth)
      : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t bandwidth() const noexcept { return bw_; }

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
    if (j > i) std::swap(i, j);
    if (i - j > bw_) return 0.0;
    return data_[i * (bw_ + 1) + (i - j)];
  }

  /// Adds `value` to (i, j) and, being symmetric, to (j, i).
  void add(std::size_t i, std::size_t j, double value) {
    if (j > i) std::swap(i, j);
    detail::require(i - j <= bw_, ErrorKind::invalid_argument, "band matrix: entry outside band");
    data_[i * (bw_ + 1) + (i - j)] += value;
  }

  void add_diagonal(std::span<const double> d) {
    detail::require(d.size() == n_, ErrorKind::invalid_argument, "band matrix: diagonal size");
    for (std::size_t i = 0; i < n_; ++i) data_[i * (bw_ + 1)] += d[i];
  }

  SymmetricBandMatrix& operator+=(const SymmetricBandMatrix& other) {
    detail::require(other.n_ == n_ && other.bw_ == bw_, ErrorKind::invalid_argument,
                    "band matrix: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  SymmetricBandMatrix& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const {
    detail::require(x.size() == n_, ErrorKind::invalid_argument, "band matrix: vector size");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i >= bw_ ? i - bw_ : 0;
      for (std::size_t j = j0; j <= i; ++j) {
        const double a = data_[i * (bw_ + 1) + (i - j)];
        y[i] += a * x[j];
        if (j != i) y[j] += a * x[i];
      }
    }
    return y;
  }

  [[nodiscard]] double quadratic_form(std::span<const double> x) const {
    const auto y = multiply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += x[i] * y[i];
    return s;
  }

  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                              static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i >= bw_ ? i - bw_ : 0;
      for (std::size_t j = j0; j <= i; ++j) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        m(ii, jj) = m(jj, ii) = data_[i * (bw_ + 1) + (i - j)];
      }
    }
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

/// Pivots below this fraction of the largest diagonal entry mark the matrix
/// as numerically singular.
inline constexpr double kSingularPivotRatio = 1e-14;

/// Band Cholesky A = L L^T, O(n bw^2).
class BandCholesky {
 public:
  explicit BandCholesky(const SymmetricBandMatrix& a) : n_(a.size()), bw_(a.bandwidth()) {
    l_.assign(n_ * (bw_ + 1), 0.0);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
    const double floor = kSingularPivotRatio * max_diag;

    for (std::size_t j = 0; j < n_; ++j) {
      const std::size_t k0 = j >= bw_ ? j - bw_ : 0;
      double d = a(j, j);
      for (std::size_t k = k0; k < j; ++k) d -= sq(at(j, k));
      detail::require(d > floor, ErrorKind::singular_system,
                      "band Cholesky: matrix not positive definite at row " + std::to_string(j));
      const double ljj = std::sqrt(d);
      ref(j, j) = ljj;
      const std::size_t i_end = std::min(n_, j + bw_ + 1);
      for (std::size_t i = j + 1; i < i_end; ++i) {
        const std::size_t kk0 = i >= bw_ ? i - bw_ : 0;
        double s = a(i, j);
        for (std::size_t k = kk0; k < j; ++k) s -= at(i, k) * at(j, k);
        ref(i, j) = s / ljj;
      }
    }
  }

  [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
    detail::require(b.size() == n_, ErrorKind::invalid_argument, "band Cholesky: rhs size");
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t k0 = i >= bw_ ? i - bw_ : 0;
      for (std::size_t k = k0; k < i; ++k) y[i] -= at(i, k) * y[k];
      y[i] /= at(i, i);
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      const std::size_t k_end = std::min(n_, ii + bw_ + 1);
      for (std::size_t k = ii + 1; k < k_end; ++k) y[ii] -= at(k, ii) * y[k];
      y[ii] /= at(ii, ii);
    }
    return y;
  }

 private:
  static double sq(double x) { return x * x; }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return l_[i * (bw_ + 1) + (i - j)]; }
  double& ref(std::size_t i, std::size_t j) { return l_[i * (bw_ + 1) + (i - j)]; }

  std::size_t n_;
  std::size_t bw_;
  std::vector<double> l_;
};

}  // namespace avltraj
