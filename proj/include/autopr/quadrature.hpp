#pragma once

#include <functional>

namespace autopr {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b].
/// Refines the interval with the largest error estimate until the total
/// error is below max(abs_tol, rel_tol * |value|) or max_intervals is hit.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-12, double abs_tol = 0.0, int max_intervals = 2000);

}  // namespace autopr
