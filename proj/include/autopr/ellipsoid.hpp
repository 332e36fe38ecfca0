#pragma once

// Single bounding ellipsoid in the unit hypercube, used to propose
// replacement points for nested sampling.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <algorithm>
#include <random>
#include <stdexcept>

namespace autopr {

template <typename Scalar>
struct Ellipsoid {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector center;
  Matrix shape;  // {x : (x - c)^T shape^{-1} (x - c) <= 1}
  Matrix chol;   // lower Cholesky factor of shape

  Eigen::Index dimension() const { return center.size(); }

  template <typename Derived>
  Scalar mahalanobis_squared(const Eigen::MatrixBase<Derived>& x) const {
    const Vector w = chol.template triangularView<Eigen::Lower>().solve(x - center);
    return w.squaredNorm();
  }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x) const {
    return mahalanobis_squared(x) <= Scalar(1);
  }

  /// log of the d-ball volume times sqrt(det(shape)).
  Scalar log_volume() const {
    const auto d = static_cast<Scalar>(dimension());
    const Scalar log_ball = Scalar(0.5) * d * std::log(std::numbers::pi_v<Scalar>) - std::lgamma(d / 2 + 1);
    return log_ball + chol.diagonal().array().log().sum();
  }

  /// The same ellipsoid with its volume multiplied by `factor`.
  Ellipsoid scaled_volume(Scalar factor) const {
    const Scalar linear = std::pow(factor, Scalar(1) / static_cast<Scalar>(dimension()));
    return Ellipsoid{center, shape * (linear * linear), chol * linear};
  }
};

/// Bounding ellipsoid of the columns of `points`: sample mean as centre,
/// sample covariance scaled until every point has Mahalanobis^2 <= 1, then
/// volume enlarged by 1/efr. A covariance that is near singular gets
/// ridge * I added, so identical points produce a small ball.
template <typename Derived>
Ellipsoid<typename Derived::Scalar> bounding_ellipsoid(const Eigen::MatrixBase<Derived>& points,
                                                       typename Derived::Scalar efr,
                                                       typename Derived::Scalar ridge) {
  using Scalar = typename Derived::Scalar;
  using E = Ellipsoid<Scalar>;
  const Eigen::Index dim = points.rows();
  const Eigen::Index n = points.cols();
  if (dim < 1 || n < dim + 1) throw std::invalid_argument("bounding_ellipsoid needs at least dim + 1 points");
  if (!(efr > 0 && efr <= 1)) throw std::invalid_argument("efr must lie in (0, 1]");

  E ell;
  ell.center = points.rowwise().mean();
  const typename E::Matrix centered = points.colwise() - ell.center;
  typename E::Matrix cov = centered * centered.transpose() / static_cast<Scalar>(n - 1);

  Eigen::LLT<typename E::Matrix> llt(cov);
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Scalar min_diag = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
    singular = min_diag * min_diag < ridge;
  }
  if (singular) {
    cov += ridge * E::Matrix::Identity(dim, dim);
    llt.compute(cov);
  }

  Scalar max_d2 = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const typename E::Vector w = llt.matrixL().solve(centered.col(j));
    max_d2 = std::max(max_d2, w.squaredNorm());
  }
  if (max_d2 <= 0) max_d2 = 1;

  ell.shape = cov * max_d2;
  ell.chol = typename E::Matrix(llt.matrixL()) * std::sqrt(max_d2);
  return ell.scaled_volume(Scalar(1) / efr);
}

/// Uniform draw from the interior of the ellipsoid.
template <typename Scalar, typename Rng>
typename Ellipsoid<Scalar>::Vector sample_uniform_in_ellipsoid(const Ellipsoid<Scalar>& ell, Rng& rng) {
  const Eigen::Index dim = ell.dimension();
  std::normal_distribution<Scalar> normal;
  std::uniform_real_distribution<Scalar> uniform;
  typename Ellipsoid<Scalar>::Vector z(dim);
  Scalar norm = 0;
  do {
    for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal(rng);
    norm = z.norm();
  } while (norm == 0);
  const Scalar radius = std::pow(uniform(rng), Scalar(1) / static_cast<Scalar>(dim));
  return ell.center + ell.chol.template triangularView<Eigen::Lower>() * (z * (radius / norm));
}

/// Uniform draw from the ellipsoid, or nullopt when it lands outside the
/// open unit cube (the caller counts the rejection and redraws).
template <typename Scalar, typename Rng>
std::optional<typename Ellipsoid<Scalar>::Vector> sample_in_ellipsoid(const Ellipsoid<Scalar>& ell, Rng& rng) {
  auto x = sample_uniform_in_ellipsoid(ell, rng);
  if ((x.array() > Scalar(0)).all() && (x.array() < Scalar(1)).all()) return x;
  return std::nullopt;
}

}  // namespace autopr
