#include "autopr/priors.hpp"

#include "autopr/errors.hpp"
#include "autopr/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace autopr {

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::TruncatedGaussianDiagonal: return "truncated-gaussian-diagonal";
    case PriorKind::GaussianFullCovariance: return "gaussian-full-covariance";
    case PriorKind::UniformBox: return "uniform-box";
  }
  return "unknown";
}

PriorKind prior_kind_from_string(std::string_view name) {
  if (name == "truncated-gaussian-diagonal" || name == "truncated") return PriorKind::TruncatedGaussianDiagonal;
  if (name == "gaussian-full-covariance" || name == "gaussian") return PriorKind::GaussianFullCovariance;
  if (name == "uniform-box" || name == "uniform") return PriorKind::UniformBox;
  throw std::invalid_argument("unknown prior kind '" + std::string(name) + "'");
}

namespace {

void check_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, Eigen::Index dim) {
  if (lower.size() != dim || upper.size() != dim)
    throw std::invalid_argument("support bounds must match the prior dimension");
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k]))
      throw std::invalid_argument("support requires finite lower < upper in every dimension");
  }
}

void check_dim(const PriorSpec& prior, Eigen::Index size) {
  if (size != prior.dimension())
    throw std::invalid_argument("vector dimension " + std::to_string(size) + " does not match prior dimension " +
                                std::to_string(prior.dimension()));
}

bool in_box(const PriorSpec& prior, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return (theta.array() >= prior.lower().array()).all() && (theta.array() <= prior.upper().array()).all();
}

}  // namespace

PriorSpec PriorSpec::truncated_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale,
                                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (mean.size() == 0) throw std::invalid_argument("prior dimension must be positive");
  if (scale.size() != mean.size()) throw std::invalid_argument("scale must match the mean dimension");
  if (!(scale.array() > 0.0).all() || !scale.allFinite())
    throw std::invalid_argument("every prior scale entry must be positive and finite");
  check_box(lower, upper, mean.size());

  PriorSpec p;
  p.kind_ = PriorKind::TruncatedGaussianDiagonal;
  p.mean_ = mean;
  p.scale_ = scale;
  p.lower_ = lower;
  p.upper_ = upper;
  p.log_mass_.resize(mean.size());
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    p.log_mass_[k] = log_normal_cdf_diff((lower[k] - mean[k]) / scale[k], (upper[k] - mean[k]) / scale[k]);
  }
  return p;
}

PriorSpec PriorSpec::truncated_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(mean.size(), kDefaultSupportHalfWidth);
  return truncated_gaussian(mean, scale, -half, half);
}

PriorSpec PriorSpec::gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, double beta_min) {
  if (mean.size() == 0) throw std::invalid_argument("prior dimension must be positive");
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw std::invalid_argument("covariance must be K x K");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  if (!(beta_min > 0.0 && beta_min <= 1.0))
    throw std::invalid_argument("beta_min must lie in (0, 1] for unbounded support");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance is not positive definite");

  PriorSpec p;
  p.kind_ = PriorKind::GaussianFullCovariance;
  p.mean_ = mean;
  p.covariance_ = covariance;
  p.scale_ = covariance.diagonal().cwiseSqrt();
  p.beta_min_ = beta_min;
  p.chol_ = llt.matrixL();
  p.log_det_ = 2.0 * p.chol_.diagonal().array().log().sum();
  const double inf = std::numeric_limits<double>::infinity();
  p.lower_ = Eigen::VectorXd::Constant(mean.size(), -inf);
  p.upper_ = Eigen::VectorXd::Constant(mean.size(), inf);
  return p;
}

PriorSpec PriorSpec::uniform(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() == 0) throw std::invalid_argument("prior dimension must be positive");
  check_box(lower, upper, lower.size());
  PriorSpec p;
  p.kind_ = PriorKind::UniformBox;
  p.lower_ = lower;
  p.upper_ = upper;
  p.mean_ = 0.5 * (lower + upper);
  p.scale_ = (upper - lower) / std::sqrt(12.0);
  return p;
}

Eigen::Matrix2d PriorSpec::bivariate_covariance(double sigma1, double sigma2, double rho) {
  Eigen::Matrix2d cov;
  cov << sigma1 * sigma1, rho * sigma1 * sigma2, rho * sigma1 * sigma2, sigma2 * sigma2;
  return cov;
}

double PriorSpec::log_box_volume() const {
  if (!bounded()) return kInf;
  return (upper_ - lower_).array().log().sum();
}

void PriorSpec::check_beta(double beta) const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!bounded() && beta < beta_min_)
    throw UnsupportedConfiguration("beta = " + std::to_string(beta) + " is below beta_min = " +
                                   std::to_string(beta_min_) + " for a prior with unbounded support");
}

PowerPriorEval power_prior(const PriorSpec& prior, double beta) {
  PowerPriorEval eval;
  eval.beta = beta;
  eval.log_norm = log_power_norm(prior, beta);
  eval.effective_scale = beta < kBetaZeroThreshold
                             ? Eigen::VectorXd::Constant(prior.dimension(), kInf)
                             : Eigen::VectorXd(prior.scale() / std::sqrt(beta));
  return eval;
}

double log_density(const PriorSpec& prior, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  check_dim(prior, theta.size());
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal: {
      if (!in_box(prior, theta)) return -kInf;
      const auto z = ((theta - prior.mean()).array() / prior.scale().array());
      return -0.5 * z.square().sum() - 0.5 * kLog2Pi * static_cast<double>(theta.size()) -
             prior.scale().array().log().sum() - prior.log_truncation_mass().sum();
    }
    case PriorKind::GaussianFullCovariance: {
      const Eigen::VectorXd w = prior.cholesky_factor().triangularView<Eigen::Lower>().solve(theta - prior.mean());
      return -0.5 * w.squaredNorm() - 0.5 * kLog2Pi * static_cast<double>(theta.size()) -
             0.5 * prior.log_det_covariance();
    }
    case PriorKind::UniformBox:
      return in_box(prior, theta) ? -prior.log_box_volume() : -kInf;
  }
  return -kInf;
}

double log_power_norm(const PriorSpec& prior, double beta) {
  prior.check_beta(beta);
  if (beta == 1.0) return 0.0;
  const auto dim = static_cast<double>(prior.dimension());
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal: {
      if (beta < kBetaZeroThreshold) return prior.log_box_volume();
      const double root = std::sqrt(beta);
      double acc = 0.0;
      for (Eigen::Index k = 0; k < prior.dimension(); ++k) {
        const double sigma = prior.scale()[k];
        const double log_sigma = std::log(sigma);
        const double lo = root * (prior.lower()[k] - prior.mean()[k]) / sigma;
        const double hi = root * (prior.upper()[k] - prior.mean()[k]) / sigma;
        acc += -beta * (log_sigma + prior.log_truncation_mass()[k]) + 0.5 * (1.0 - beta) * kLog2Pi + log_sigma -
               0.5 * std::log(beta) + log_normal_cdf_diff(lo, hi);
      }
      return acc;
    }
    case PriorKind::GaussianFullCovariance:
      return 0.5 * dim * (1.0 - beta) * kLog2Pi + 0.5 * (1.0 - beta) * prior.log_det_covariance() -
             0.5 * dim * std::log(beta);
    case PriorKind::UniformBox:
      return (1.0 - beta) * prior.log_box_volume();
  }
  return 0.0;
}

Eigen::VectorXd transform_conditional(const PriorSpec& prior, double beta,
                                      const Eigen::Ref<const Eigen::VectorXd>& u) {
  check_dim(prior, u.size());
  prior.check_beta(beta);
  if (!((u.array() >= 0.0).all() && (u.array() <= 1.0).all()))
    throw std::invalid_argument("unit-cube coordinates must lie in [0, 1]");

  const Eigen::Index dim = prior.dimension();
  Eigen::VectorXd theta(dim);
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal:
      if (beta < kBetaZeroThreshold) {
        theta = prior.lower().array() + u.array() * (prior.upper() - prior.lower()).array();
        break;
      }
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double s = prior.scale()[k] / std::sqrt(beta);
        const double lo = (prior.lower()[k] - prior.mean()[k]) / s;
        const double hi = (prior.upper()[k] - prior.mean()[k]) / s;
        theta[k] = prior.mean()[k] + s * truncated_normal_quantile(lo, hi, u[k]);
        theta[k] = std::clamp(theta[k], prior.lower()[k], prior.upper()[k]);
      }
      break;
    case PriorKind::GaussianFullCovariance: {
      Eigen::VectorXd z(dim);
      for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal_quantile(u[k]);
      theta = prior.mean() + prior.cholesky_factor().triangularView<Eigen::Lower>() * z / std::sqrt(beta);
      break;
    }
    case PriorKind::UniformBox:
      theta = prior.lower().array() + u.array() * (prior.upper() - prior.lower()).array();
      break;
  }
  return theta;
}

double log_modified_prior_density(const PriorSpec& prior, double beta,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta) {
  prior.check_beta(beta);
  const double base = log_density(prior, theta);
  if (beta == 1.0) return base;
  if (base == -kInf) return -kInf;
  return beta * base - log_power_norm(prior, beta);
}

double modified_prior_marginal_cdf(const PriorSpec& prior, double beta, Eigen::Index dim, double x) {
  prior.check_beta(beta);
  if (dim < 0 || dim >= prior.dimension()) throw std::invalid_argument("dimension index out of range");
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal: {
      const double a = prior.lower()[dim];
      const double b = prior.upper()[dim];
      if (beta < kBetaZeroThreshold) return std::clamp((x - a) / (b - a), 0.0, 1.0);
      const double s = prior.scale()[dim] / std::sqrt(beta);
      const double mu = prior.mean()[dim];
      return truncated_normal_cdf((a - mu) / s, (b - mu) / s, (x - mu) / s);
    }
    case PriorKind::GaussianFullCovariance: {
      const double s = std::sqrt(prior.covariance()(dim, dim) / beta);
      return normal_cdf((x - prior.mean()[dim]) / s);
    }
    case PriorKind::UniformBox: {
      const double a = prior.lower()[dim];
      const double b = prior.upper()[dim];
      return std::clamp((x - a) / (b - a), 0.0, 1.0);
    }
  }
  return 0.0;
}

std::vector<PriorCurveRow> emit_prior_evolution(const PriorSpec& prior, const std::vector<double>& betas,
                                                const Eigen::VectorXd& grid) {
  if (prior.dimension() != 1) throw UnsupportedConfiguration("prior evolution curves require a 1D prior");
  std::vector<PriorCurveRow> rows;
  rows.reserve(betas.size() * static_cast<std::size_t>(grid.size()));
  Eigen::VectorXd theta(1);
  for (double beta : betas) {
    prior.check_beta(beta);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      theta[0] = grid[g];
      rows.push_back({beta, grid[g], std::exp(log_modified_prior_density(prior, beta, theta))});
    }
  }
  return rows;
}

}  // namespace autopr
