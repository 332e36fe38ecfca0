#pragma once

// Reference computations for the unit tests. Deliberately naive: composite
// Simpson rules, bisection and direct sums, sharing no code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Simpson on [a, b] with extra panels packed around a peak at c of width w.
inline double simpson_peaked(const std::function<double(double)>& f, double a, double b, double c, double w,
                             int n = 20000) {
  const double lo = std::clamp(c - 40.0 * w, a, b);
  const double hi = std::clamp(c + 40.0 * w, a, b);
  double total = 0.0;
  if (lo > a) total += simpson(f, a, lo, n);
  if (hi > lo) total += simpson(f, lo, hi, n);
  if (b > hi) total += simpson(f, hi, b, n);
  return total;
}

/// x in [a, b] with f(x) = target for increasing f.
inline double bisect(const std::function<double(double)>& f, double target, double a, double b) {
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (f(m) < target ? a : b) = m;
  }
  return 0.5 * (a + b);
}

/// Density of N(mu, s^2) truncated to [a, b].
inline double truncated_pdf(double x, double mu, double s, double a, double b) {
  if (x < a || x > b) return 0.0;
  const double mass = phi((b - mu) / s) - phi((a - mu) / s);
  return std::exp(-0.5 * (x - mu) * (x - mu) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi) * mass);
}

inline double truncated_cdf(double x, double mu, double s, double a, double b) {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  if (a > mu) {
    auto q = [&](double y) { return phi(-(y - mu) / s); };
    return (q(a) - q(x)) / (q(a) - q(b));
  }
  return (phi((x - mu) / s) - phi((a - mu) / s)) / (phi((b - mu) / s) - phi((a - mu) / s));
}

/// One-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

/// Gaussian log likelihood summed term by term.
inline double log_likelihood(const Eigen::MatrixXd& m, const Eigen::VectorXd& noise_mean, const Eigen::MatrixXd& cov,
                             const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd inv = cov.inverse();
  const double log_det = std::log((2.0 * std::numbers::pi * cov).determinant());
  double total = 0.0;
  for (Eigen::Index n = 0; n < m.rows(); ++n) {
    const Eigen::VectorXd r = m.row(n).transpose() - noise_mean - theta;
    total += -0.5 * log_det - 0.5 * r.dot(inv * r);
  }
  return total;
}

/// log of the evidence for a 1D Gaussian likelihood of N unit-variance
/// measurements with mean mbar under a truncated N(mu, s^2) prior on [a, b].
inline double log_evidence_1d(double mbar, double scatter, int n_meas, double mu, double s, double a, double b) {
  const double peak = -0.5 * n_meas * std::log(2.0 * std::numbers::pi) - 0.5 * scatter;
  auto f = [&](double t) { return std::exp(-0.5 * n_meas * (t - mbar) * (t - mbar)) * truncated_pdf(t, mu, s, a, b); };
  return peak + std::log(simpson_peaked(f, a, b, mbar, 1.0 / std::sqrt(n_meas)));
}

}  // namespace oracle
