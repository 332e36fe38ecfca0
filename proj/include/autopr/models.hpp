#pragma once

// Gaussian mean-measurement benchmark: m_n = theta + xi_n with Gaussian xi,
// plus the ground-truth oracles used to score sampler output.

#include "autopr/priors.hpp"
#include "autopr/repartition.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace autopr {

struct GaussianMeasurementModel {
  Eigen::Index dimension = 1;
  Eigen::Index n_measurements = 1;
  Eigen::VectorXd noise_mean;  // defaults to zero
  Eigen::MatrixXd noise_cov;   // defaults to identity

  /// Zero-mean noise with covariance sigma^2 I.
  static GaussianMeasurementModel isotropic(Eigen::Index dimension, Eigen::Index n_measurements, double sigma = 1.0);

  void validate() const;
  bool diagonal_noise() const;
};

struct Dataset {
  Eigen::MatrixXd measurements;  // N x K, one measurement per row
  Eigen::VectorXd theta_star;
  std::uint64_t seed = 0;
};

Dataset simulate_dataset(const GaussianMeasurementModel& model, const Eigen::VectorXd& theta_star,
                         std::uint64_t seed);

/// sum_n [-1/2 log det(2 pi Sigma) - 1/2 r_n^T Sigma^{-1} r_n], r_n = m_n - mu_xi - theta.
double log_likelihood(const GaussianMeasurementModel& model, const Dataset& data,
                      const Eigen::Ref<const Eigen::VectorXd>& theta);

/// The same likelihood, reduced to sufficient statistics for repeated calls.
class GaussianLikelihood {
 public:
  GaussianLikelihood(const GaussianMeasurementModel& model, const Dataset& data);
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  const Eigen::VectorXd& mean_residual() const { return mean_; }

 private:
  Eigen::MatrixXd chol_;  // lower Cholesky factor of the noise covariance
  Eigen::VectorXd mean_;  // mean of m_n - mu_xi
  double constant_ = 0.0;
  double scatter_ = 0.0;
  double n_ = 1.0;
};

LogLikelihood make_log_likelihood(const GaussianMeasurementModel& model, const Dataset& data);

struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  /// Set when more than 1e-6 of the untruncated posterior lies outside the
  /// prior support, i.e. the conjugate formula is no longer exact.
  bool truncation_warning = false;
};

/// Conjugate Gaussian posterior, ignoring truncation. A uniform-box prior is
/// treated as flat.
PosteriorSummary analytic_posterior(const GaussianMeasurementModel& model, const Dataset& data,
                                    const PriorSpec& prior);

/// Ground-truth log evidence: adaptive quadrature in 1D, iterated adaptive
/// quadrature in 2D with a diagonal prior, a sum of 1D quadratures for
/// factorised diagonal problems in higher dimension, and the closed-form
/// Gaussian convolution for full-covariance priors.
double oracle_log_evidence(const GaussianMeasurementModel& model, const Dataset& data, const PriorSpec& prior);

/// 1D adaptive quadrature of L * pi over the support.
double quadrature_log_evidence_1d(const GaussianMeasurementModel& model, const Dataset& data,
                                  const PriorSpec& prior);

/// Iterated adaptive quadrature in 2D over a window of +-20 posterior
/// standard deviations intersected with the support.
double quadrature_log_evidence_2d(const GaussianMeasurementModel& model, const Dataset& data,
                                  const PriorSpec& prior);

/// Composite Simpson on an n x n tensor grid over the same window, with one
/// Richardson step between n and 2n.
double tensor_grid_log_evidence_2d(const GaussianMeasurementModel& model, const Dataset& data,
                                   const PriorSpec& prior, int n = 400);

/// Closed-form evidence for an untruncated Gaussian prior.
double closed_form_log_evidence(const GaussianMeasurementModel& model, const Dataset& data, const PriorSpec& prior);

}  // namespace autopr
