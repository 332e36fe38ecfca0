#include "autopr/special.hpp"

#include <algorithm>

namespace autopr {

double log_normal_cdf(double x) {
  if (x > -30.0) {
    if (x > 5.0) return std::log1p(-normal_sf(x));
    return std::log(normal_cdf(x));
  }
  // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
  return log_normal_pdf(x) - std::log(-x) + std::log(series);
}

double log_normal_cdf_diff(double lo, double hi) {
  if (!(lo < hi)) return -kInf;
  if (lo >= 0.0) {
    // Both bounds in the upper half: Phi(hi) - Phi(lo) = Q(lo) - Q(hi).
    const double a = log_normal_sf(lo);
    const double b = log_normal_sf(hi);
    return a + std::log1p(-std::exp(b - a));
  }
  if (hi <= 0.0) {
    const double a = log_normal_cdf(hi);
    const double b = log_normal_cdf(lo);
    return a + std::log1p(-std::exp(b - a));
  }
  return std::log1p(-(normal_cdf(lo) + normal_sf(hi)));
}

namespace {

// AS241 PPND16, valid for 0 < p < 1. About 16 significant digits.
double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
               45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
               21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace

double normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;
  if (p > 0.5) return -normal_quantile(1.0 - p);
  double x = ppnd16(p);
  // One Newton step on Phi; in the lower half Phi(x) is computed without
  // cancellation so the correction is meaningful down to subnormal p.
  const double dens = normal_pdf(x);
  if (dens > 0.0 && std::isfinite(x)) x -= (normal_cdf(x) - p) / dens;
  return x;
}

double truncated_normal_quantile(double lo, double hi, double u) {
  if (u <= 0.0) return lo;
  if (u >= 1.0) return hi;
  double z;
  if (lo >= 0.0) {
    // Mass lies in the upper tail: invert the survival function.
    const double qlo = normal_sf(lo);
    const double qhi = normal_sf(hi);
    z = normal_quantile_upper(qlo - u * (qlo - qhi));
  } else if (hi <= 0.0) {
    const double plo = normal_cdf(lo);
    const double phi = normal_cdf(hi);
    z = normal_quantile(plo + u * (phi - plo));
  } else {
    const double plo = normal_cdf(lo);
    const double qhi = normal_sf(hi);
    const double mass = 1.0 - plo - qhi;
    const double p = plo + u * mass;
    if (p <= 0.5) {
      z = normal_quantile(p);
    } else {
      z = normal_quantile_upper(qhi + (1.0 - u) * mass);
    }
  }
  return std::clamp(z, lo, hi);
}

double truncated_normal_cdf(double lo, double hi, double x) {
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  return std::exp(log_normal_cdf_diff(lo, x) - log_normal_cdf_diff(lo, hi));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -kInf;
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

}  // namespace autopr
