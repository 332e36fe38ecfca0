#pragma once

// Prior family and the powered, renormalised prior pi(theta)^beta / Z(beta).
//
// Three kinds are supported:
//  * truncated-gaussian-diagonal: independent Gaussians, each truncated to a
//    finite box [lower, upper]. Powered priors stay in the family with scale
//    sigma / sqrt(beta), and beta = 0 is the uniform distribution on the box.
//  * gaussian-full-covariance: an untruncated correlated Gaussian. Powered
//    priors are N(mean, Sigma / beta), which is improper at beta = 0, so beta
//    is restricted to [beta_min, 1].
//  * uniform-box: flat on [lower, upper]; powering leaves it unchanged.

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace autopr {

enum class PriorKind { TruncatedGaussianDiagonal, GaussianFullCovariance, UniformBox };

std::string_view to_string(PriorKind kind);
PriorKind prior_kind_from_string(std::string_view name);

inline constexpr double kDefaultSupportHalfWidth = 50.0;
inline constexpr double kDefaultBetaMin = 1e-3;
// Below this beta the analytic beta -> 0 limits replace sigma / sqrt(beta).
inline constexpr double kBetaZeroThreshold = 1e-12;

class PriorSpec {
 public:
  static PriorSpec truncated_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale,
                                      const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  /// Truncated Gaussian on the default box [-50, 50]^K.
  static PriorSpec truncated_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& scale);
  static PriorSpec gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance,
                            double beta_min = kDefaultBetaMin);
  static PriorSpec uniform(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

  /// sigma_1, sigma_2 and correlation rho assembled into a 2x2 covariance.
  static Eigen::Matrix2d bivariate_covariance(double sigma1, double sigma2, double rho);

  PriorKind kind() const { return kind_; }
  Eigen::Index dimension() const { return mean_.size(); }
  bool bounded() const { return kind_ != PriorKind::GaussianFullCovariance; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  double beta_min() const { return bounded() ? 0.0 : beta_min_; }

  /// Lower Cholesky factor of the covariance (full-covariance kind).
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
  double log_det_covariance() const { return log_det_; }
  /// log of the beta = 1 truncation mass per dimension (diagonal kind).
  const Eigen::VectorXd& log_truncation_mass() const { return log_mass_; }
  /// log of the support box volume; +inf when unbounded.
  double log_box_volume() const;

  /// Throws std::invalid_argument for beta outside [0, 1] and
  /// UnsupportedConfiguration for beta < beta_min on unbounded support.
  void check_beta(double beta) const;

 private:
  PriorSpec() = default;

  PriorKind kind_ = PriorKind::UniformBox;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd covariance_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  double beta_min_ = kDefaultBetaMin;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  Eigen::VectorXd log_mass_;
};

/// The powered prior at a given beta, evaluated once.
struct PowerPriorEval {
  double beta = 1.0;
  double log_norm = 0.0;             // log Z_pi(beta)
  Eigen::VectorXd effective_scale;   // sigma / sqrt(beta); +inf entries at beta = 0
};

PowerPriorEval power_prior(const PriorSpec& prior, double beta);

/// log pi(theta); -inf outside the support.
double log_density(const PriorSpec& prior, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// log Z_pi(beta) = log of the integral of pi(theta)^beta over the support.
double log_power_norm(const PriorSpec& prior, double beta);

/// Deterministic map from the unit cube onto pi(theta)^beta / Z_pi(beta).
Eigen::VectorXd transform_conditional(const PriorSpec& prior, double beta,
                                      const Eigen::Ref<const Eigen::VectorXd>& u);

/// beta * log pi(theta) - log Z_pi(beta).
double log_modified_prior_density(const PriorSpec& prior, double beta,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Marginal CDF of the modified prior along one dimension (diagonal and
/// uniform kinds, and full covariance via its marginal Gaussian).
double modified_prior_marginal_cdf(const PriorSpec& prior, double beta, Eigen::Index dim, double x);

struct PriorCurveRow {
  double beta;
  double theta;
  double density;
};

/// Rows of the 1D modified prior density on a grid, one block per beta.
std::vector<PriorCurveRow> emit_prior_evolution(const PriorSpec& prior, const std::vector<double>& betas,
                                                const Eigen::VectorXd& grid);

}  // namespace autopr
