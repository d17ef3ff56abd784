#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) throw std::runtime_error("gauss_solve: singular");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

/// Hermite value and derivative on one interval, written straight from the
/// basis polynomials h00 = 2s^3-3s^2+1, h10 = s^3-2s^2+s, h01 = -2s^3+3s^2,
/// h11 = s^3-s^2.
struct HermitePoint {
  double x;
  double v;
};

inline HermitePoint hermite_interval(double t0, double y0, double m0, double t1, double y1,
                                     double m1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double b00 = 2 * s3 - 3 * s2 + 1;
  const double b10 = s3 - 2 * s2 + s;
  const double b01 = -2 * s3 + 3 * s2;
  const double b11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s;
  const double d11 = 3 * s2 - 2 * s;
  return {b00 * y0 + b10 * h * m0 + b01 * y1 + b11 * h * m1,
          (d00 * y0 + d10 * h * m0 + d01 * y1 + d11 * h * m1) / h};
}

/// Weighted cubic least squares at `tq` in the raw (t - tq) monomial basis:
/// k nearest samples by brute-force sort, bandwidth = k-th distance, tricube
/// weights, normal equations solved by Gaussian elimination.
inline double wls_local_cubic(const std::vector<double>& t, const std::vector<double>& y,
                              std::size_t k, double tq) {
  std::vector<std::size_t> idx(t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(t[a] - tq) < std::abs(t[b] - tq);
  });
  const double h = std::abs(t[idx[k - 1]] - tq);
  std::vector<std::vector<double>> a(4, std::vector<double>(4, 0.0));
  std::vector<double> rhs(4, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = idx[r];
    const double u = std::abs(t[i] - tq) / h;
    const double w = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
    const double d = t[i] - tq;
    const double p[4] = {1.0, d, d * d, d * d * d};
    for (int j = 0; j < 4; ++j) {
      for (int l = 0; l < 4; ++l) a[j][l] += w * p[j] * p[l];
      rhs[j] += w * p[j] * y[i];
    }
  }
  return gauss_solve(a, rhs)[0];
}

/// V-SPLINE objective evaluated from its definition: data misfit plus
/// n * sum_i lambda_i * integral of (x'')^2 over each Hermite piece, the
/// integral taken by 3-point Gauss-Legendre quadrature (exact for the
/// quadratic integrand). lambda_i = eta h / max(|secant|, floor)^2.
struct SplineProblem {
  std::vector<double> t, x, v;
  double gamma = 1.0;
  double eta = 0.01;
  double velocity_floor = 0.1;
  // Optional monotonicity penalty mu / h [(th_v,i - s_i)^2 + (th_v,i+1 - s_i)^2]
  double mu = 0.0;
};

inline double spline_objective(const SplineProblem& p, const std::vector<double>& theta) {
  const std::size_t n = p.t.size();
  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f += (theta[2 * i] - p.x[i]) * (theta[2 * i] - p.x[i]);
    f += p.gamma * (theta[2 * i + 1] - p.v[i]) * (theta[2 * i + 1] - p.v[i]);
  }
  const double gl_nodes[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gl_weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = p.t[i + 1] - p.t[i];
    const double secant = (p.x[i + 1] - p.x[i]) / h;
    const double vavg = std::max(std::abs(secant), p.velocity_floor);
    const double lambda = p.eta * h / (vavg * vavg);
    const double y0 = theta[2 * i], m0 = theta[2 * i + 1];
    const double y1 = theta[2 * i + 2], m1 = theta[2 * i + 3];
    double integral = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double s = 0.5 * (gl_nodes[q] + 1.0);
      // second derivative in t of the Hermite form
      const double acc = ((12 * s - 6) * y0 + (6 * s - 4) * h * m0 + (-12 * s + 6) * y1 +
                          (6 * s - 2) * h * m1) / (h * h);
      integral += 0.5 * h * gl_weights[q] * acc * acc;
    }
    f += static_cast<double>(n) * lambda * integral;
    if (p.mu > 0.0) {
      const double dv0 = theta[2 * i + 1] - secant;
      const double dv1 = theta[2 * i + 3] - secant;
      f += p.mu / h * (dv0 * dv0 + dv1 * dv1);
    }
  }
  return f;
}

/// Brute-force minimiser of a quadratic objective: recovers gradient and
/// Hessian by finite differences (exact for quadratics up to rounding) around
/// the data point `center`, then solves the stationarity system.
inline std::vector<double> minimize_quadratic(const SplineProblem& p,
                                              const std::vector<double>& center, double step) {
  const std::size_t m = center.size();
  auto f = [&](const std::vector<double>& th) { return spline_objective(p, th); };
  const double f0 = f(center);
  std::vector<double> fp(m), fm(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto a = center;
    a[j] += step;
    fp[j] = f(a);
    a[j] = center[j] - step;
    fm[j] = f(a);
  }
  std::vector<std::vector<double>> hess(m, std::vector<double>(m));
  std::vector<double> grad(m);
  for (std::size_t j = 0; j < m; ++j) {
    grad[j] = (fp[j] - fm[j]) / (2 * step);
    hess[j][j] = (fp[j] - 2 * f0 + fm[j]) / (step * step);
    for (std::size_t k = j + 1; k < m; ++k) {
      auto a = center;
      a[j] += step;
      a[k] += step;
      const double fjk = f(a);
      hess[j][k] = hess[k][j] = (fjk - fp[j] - fp[k] + f0) / (step * step);
    }
  }
  std::vector<double> neg(m);
  for (std::size_t j = 0; j < m; ++j) neg[j] = -grad[j];
  const auto delta = gauss_solve(hess, neg);
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = center[j] + delta[j];
  return out;
}

/// Random monotone trip: irregular sample times, nonnegative speeds with stops,
/// optional noise on velocity. Positions are exact integrals of a piecewise
/// linear speed profile, hence nondecreasing.
struct RandomTrip {
  std::vector<double> t, x, v;
};

inline RandomTrip random_monotone_trip(std::uint64_t seed, std::size_t n, double mean_dt = 10.0,
                                       double vel_noise = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, vel_noise);
  RandomTrip trip;
  double t = 0.0, x = 0.0, v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    trip.t.push_back(t);
    trip.x.push_back(x);
    trip.v.push_back(vel_noise > 0 ? std::max(0.0, v + noise(rng)) : v);
    const double dt = 1.0 + (mean_dt - 1.0) * 2.0 * unif(rng);
    double v_next = unif(rng) < 0.2 ? 0.0 : 45.0 * unif(rng);
    x += 0.5 * (v + v_next) * dt;
    t += dt;
    v = v_next;
  }
  return trip;
}

}  // namespace oracle
