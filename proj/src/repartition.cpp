#include "autopr/repartition.hpp"

#include "autopr/special.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace autopr {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Standard: return "standard";
    case Mode::FixedBeta: return "fixed-beta";
    case Mode::AutoPR: return "autopr";
  }
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  if (name == "standard") return Mode::Standard;
  if (name == "fixed-beta") return Mode::FixedBeta;
  if (name == "autopr") return Mode::AutoPR;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void InferenceProblem::validate() const {
  if (!log_likelihood) throw std::invalid_argument("inference problem has no likelihood");
  switch (mode) {
    case Mode::Standard:
      break;
    case Mode::FixedBeta:
      prior.check_beta(fixed_beta);
      break;
    case Mode::AutoPR:
      if (!(beta_lo >= 0.0 && beta_hi <= 1.0 && beta_lo < beta_hi))
        throw std::invalid_argument("beta prior range must satisfy 0 <= beta_lo < beta_hi <= 1");
      prior.check_beta(beta_lo);
      break;
  }
}

InferenceProblem make_standard_problem(PriorSpec prior, LogLikelihood like) {
  InferenceProblem p{std::move(prior), std::move(like)};
  p.mode = Mode::Standard;
  p.validate();
  return p;
}

InferenceProblem make_fixed_beta_problem(PriorSpec prior, LogLikelihood like, double beta) {
  InferenceProblem p{std::move(prior), std::move(like)};
  p.mode = Mode::FixedBeta;
  p.fixed_beta = beta;
  p.validate();
  return p;
}

InferenceProblem make_auto_pr_problem(PriorSpec prior, LogLikelihood like) {
  const double lo = prior.beta_min();
  return make_auto_pr_problem(std::move(prior), std::move(like), lo, 1.0);
}

InferenceProblem make_auto_pr_problem(PriorSpec prior, LogLikelihood like, double beta_lo, double beta_hi) {
  InferenceProblem p{std::move(prior), std::move(like)};
  p.mode = Mode::AutoPR;
  p.beta_lo = beta_lo;
  p.beta_hi = beta_hi;
  p.validate();
  return p;
}

double log_effective_likelihood(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                double beta) {
  problem.prior.check_beta(beta);
  const double log_prior = log_density(problem.prior, theta);
  if (log_prior == -kInf) return -kInf;
  const double log_like = problem.log_likelihood(theta);
  if (beta == 1.0) return log_like;
  return log_like + (1.0 - beta) * log_prior + log_power_norm(problem.prior, beta);
}

JointPoint joint_transform(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (u.size() != problem.cube_dimension())
    throw std::invalid_argument("unit-cube vector has dimension " + std::to_string(u.size()) + ", expected " +
                                std::to_string(problem.cube_dimension()));
  JointPoint out;
  switch (problem.mode) {
    case Mode::Standard:
      out.beta = 1.0;
      out.theta = transform_conditional(problem.prior, 1.0, u);
      break;
    case Mode::FixedBeta:
      out.beta = problem.fixed_beta;
      out.theta = transform_conditional(problem.prior, out.beta, u);
      break;
    case Mode::AutoPR:
      if (!(u[0] >= 0.0 && u[0] <= 1.0)) throw std::invalid_argument("unit-cube coordinates must lie in [0, 1]");
      out.beta = problem.beta_lo + u[0] * (problem.beta_hi - problem.beta_lo);
      out.beta = std::clamp(out.beta, problem.beta_lo, problem.beta_hi);
      out.theta = transform_conditional(problem.prior, out.beta, u.tail(u.size() - 1));
      break;
  }
  return out;
}

Eigen::VectorXd pack_params(const InferenceProblem& problem, const JointPoint& point) {
  if (problem.mode != Mode::AutoPR) return point.theta;
  Eigen::VectorXd params(point.theta.size() + 1);
  params[0] = point.beta;
  params.tail(point.theta.size()) = point.theta;
  return params;
}

std::string_view to_string(BetaBoundsMethod method) {
  return method == BetaBoundsMethod::SampleExtrema ? "extrema" : "percentile";
}

BetaBoundsMethod beta_bounds_method_from_string(std::string_view name) {
  if (name == "extrema") return BetaBoundsMethod::SampleExtrema;
  if (name == "percentile") return BetaBoundsMethod::Percentile;
  throw std::invalid_argument("unknown beta-bounds method '" + std::string(name) + "'");
}

namespace {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double empirical_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BetaBounds beta_bounds(std::span<const double> betas, BetaBoundsMethod method, double p_lo, double p_hi) {
  if (betas.empty()) throw std::invalid_argument("beta_bounds needs at least one sample");
  BetaBounds out;
  out.method = method;
  out.p_lo = p_lo;
  out.p_hi = p_hi;
  if (method == BetaBoundsMethod::SampleExtrema) {
    const auto [mn, mx] = std::minmax_element(betas.begin(), betas.end());
    out.beta_minus = *mn;
    out.beta_plus = *mx;
    return out;
  }
  if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 1.0))
    throw std::invalid_argument("percentiles must satisfy 0 <= p_lo < p_hi <= 1");
  std::vector<double> sorted(betas.begin(), betas.end());
  std::sort(sorted.begin(), sorted.end());
  out.beta_minus = empirical_quantile(sorted, p_lo);
  out.beta_plus = empirical_quantile(sorted, p_hi);
  return out;
}

DegenerateBounds::DegenerateBounds(double uncorrected_log_z, const BetaBounds& bounds)
    : std::runtime_error("degenerate beta bounds: beta_+ == beta_- == " + std::to_string(bounds.beta_plus)),
      uncorrected_(uncorrected_log_z),
      bounds_(bounds) {}

double corrected_log_evidence(double log_z_eff, const BetaBounds& bounds, double beta_lo, double beta_hi) {
  if (!(beta_hi > beta_lo)) throw std::invalid_argument("beta prior range must have positive width");
  const double width = bounds.beta_plus - bounds.beta_minus;
  if (width == 0.0) throw DegenerateBounds(log_z_eff, bounds);
  if (width < 0.0) throw std::invalid_argument("beta_plus must not be below beta_minus");
  return log_z_eff - std::log(width / (beta_hi - beta_lo));
}

}  // namespace autopr
