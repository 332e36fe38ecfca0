#pragma once

// Power posterior repartitioning.
//
// The product L(theta) pi(theta) is rewritten as Lt(theta, beta) pt(theta | beta)
// with pt = pi^beta / Z_pi(beta) and Lt = L pi^(1 - beta) Z_pi(beta). In the
// automated mode beta is an extra sampled coordinate with a uniform prior on
// [beta_lo, beta_hi]; the nested sampler then returns an effective evidence
// that is corrected by the width of the recovered beta marginal.

#include "autopr/priors.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>

namespace autopr {

/// theta -> log L(theta). Must be pure and reentrant.
using LogLikelihood = std::function<double(const Eigen::VectorXd&)>;

enum class Mode { Standard, FixedBeta, AutoPR };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct InferenceProblem {
  PriorSpec prior;
  LogLikelihood log_likelihood;
  Mode mode = Mode::Standard;
  double fixed_beta = 1.0;  // used by FixedBeta; Standard is FixedBeta at 1
  double beta_lo = 0.0;
  double beta_hi = 1.0;

  Eigen::Index physical_dimension() const { return prior.dimension(); }
  Eigen::Index cube_dimension() const { return prior.dimension() + (mode == Mode::AutoPR ? 1 : 0); }
  double beta_range_width() const { return beta_hi - beta_lo; }
  void validate() const;
};

InferenceProblem make_standard_problem(PriorSpec prior, LogLikelihood like);
InferenceProblem make_fixed_beta_problem(PriorSpec prior, LogLikelihood like, double beta);
/// Default beta range is [beta_min, 1]: [0, 1] for bounded priors.
InferenceProblem make_auto_pr_problem(PriorSpec prior, LogLikelihood like);
InferenceProblem make_auto_pr_problem(PriorSpec prior, LogLikelihood like, double beta_lo, double beta_hi);

/// log L(theta) + (1 - beta) log pi(theta) + log Z_pi(beta). Returns -inf
/// outside the prior support.
double log_effective_likelihood(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                double beta);

struct JointPoint {
  double beta = 1.0;
  Eigen::VectorXd theta;
};

/// Unit-cube coordinates to (beta, theta). In AutoPR mode coordinate 0 is
/// mapped affinely onto the beta range and the rest go through
/// transform_conditional at that beta.
JointPoint joint_transform(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& u);

/// Parameter vector stored on sampler points: (beta, theta) in AutoPR mode,
/// theta otherwise.
Eigen::VectorXd pack_params(const InferenceProblem& problem, const JointPoint& point);

enum class BetaBoundsMethod { SampleExtrema, Percentile };

std::string_view to_string(BetaBoundsMethod method);
BetaBoundsMethod beta_bounds_method_from_string(std::string_view name);

struct BetaBounds {
  double beta_minus = 0.0;
  double beta_plus = 1.0;
  BetaBoundsMethod method = BetaBoundsMethod::SampleExtrema;
  double p_lo = 0.01;
  double p_hi = 0.99;
};

/// beta_- and beta_+ from equally weighted posterior draws of beta.
BetaBounds beta_bounds(std::span<const double> betas, BetaBoundsMethod method = BetaBoundsMethod::SampleExtrema,
                       double p_lo = 0.01, double p_hi = 0.99);

/// Raised when beta_+ == beta_-; carries the uncorrected effective evidence.
class DegenerateBounds : public std::runtime_error {
 public:
  DegenerateBounds(double uncorrected_log_z, const BetaBounds& bounds);
  double uncorrected_log_z() const { return uncorrected_; }
  const BetaBounds& bounds() const { return bounds_; }

 private:
  double uncorrected_;
  BetaBounds bounds_;
};

/// log Z_eff - log((beta_+ - beta_-) / (beta_hi - beta_lo)).
double corrected_log_evidence(double log_z_eff, const BetaBounds& bounds, double beta_lo = 0.0,
                              double beta_hi = 1.0);

}  // namespace autopr
