#pragma once

// Nested sampling with a single enlarged bounding ellipsoid.
//
// Prior volumes shrink deterministically, X_i = exp(-i / n_live), and the
// evidence is accumulated in log space with trapezoid weights
// w_i = (X_{i-1} - X_{i+1}) / 2. In AutoPR mode the sampled space is the
// joint (beta, theta) cube and the likelihood is the effective likelihood.

#include "autopr/ellipsoid.hpp"
#include "autopr/repartition.hpp"
#include "autopr/special.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace autopr {

using Rng = std::mt19937_64;

struct SamplerConfig {
  int n_live = 100;
  double efr = 0.8;
  double tol = 0.5;
  long max_iterations = 1'000'000;
  int max_draw_attempts = 5000;  // likelihood-evaluated candidates per stage
  long max_outside_draws = 5'000'000;  // draws outside the cube per stage
  std::uint64_t seed = 0;
  double ridge = 1e-12;

  void validate() const;
};

struct LivePoint {
  Eigen::VectorXd u;
  Eigen::VectorXd params;  // (beta, theta) in AutoPR mode, theta otherwise
  double log_like = 0.0;   // log of the (effective) likelihood
};

struct DeadPoint {
  Eigen::VectorXd params;
  double log_like = 0.0;
  double log_weight = 0.0;  // log w_i, the prior-volume weight
  long iteration = 0;       // i, starting at 1
};

/// Plateau: every live point shares one finite log-likelihood, so no
/// replacement can rise above it. Exact for a flat likelihood; for a
/// sharply peaked one it means the live set is stuck in the tail.
enum class Termination { Converged, Plateau, Stalled, MaxIterations };

std::string_view to_string(Termination t);

struct RunResult {
  double log_z = -kInf;
  double log_z_error = 0.0;
  std::vector<DeadPoint> dead;
  std::vector<LivePoint> final_live;
  double final_live_log_weight = 0.0;  // log(X_I / n_final_live)
  /// log p_i over dead points followed by final live points.
  std::vector<double> log_importance;
  long n_like = 0;
  long n_outside = 0;  // ellipsoid draws rejected for leaving the cube
  long n_iter = 0;
  int n_live = 0;
  bool has_beta = false;
  Termination termination = Termination::Converged;

  std::size_t size() const { return dead.size() + final_live.size(); }
  /// Parameter vector of posterior point j (dead first, then live).
  const Eigen::VectorXd& params(std::size_t j) const;
  double log_like(std::size_t j) const;
};

/// Thrown when the sampler cannot continue; partial() holds the evidence and
/// archive accumulated up to the failure.
class SamplerStalled : public std::runtime_error {
 public:
  SamplerStalled(const std::string& what, RunResult partial);
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

RunResult run(const InferenceProblem& problem, const SamplerConfig& config);

struct DrawTally {
  long n_like = 0;
  long n_outside = 0;
};

/// Replacement point with log_like > threshold drawn from the enlarged
/// bounding ellipsoid of the live points. Draws outside the cube are
/// tallied and redrawn without touching the likelihood. The enlargement
/// doubles up to three times after max_draw_attempts failed candidates (or
/// max_outside_draws misses); nullopt means stalled.
std::optional<LivePoint> draw_constrained(std::span<const LivePoint> live, double threshold,
                                          const InferenceProblem& problem, const SamplerConfig& config, Rng& rng,
                                          DrawTally& tally);

/// Evaluates the problem at unit-cube coordinates u.
LivePoint evaluate_point(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& u);

/// Systematic resampling proportional to the importance weights; one
/// column per draw.
Eigen::MatrixXd equal_weight_samples(const RunResult& result, std::size_t count, Rng& rng);

/// Kish effective sample size 1 / sum p_i^2.
double effective_sample_size(const RunResult& result);

/// sqrt(H / n_live) with H = sum p_i log(L_i / Z).
double log_z_error(const RunResult& result);

/// Importance-weighted mean of the parameter vectors.
Eigen::VectorXd posterior_mean(const RunResult& result);

/// Recomputes log Z from the archive: dead L_i w_i plus the live increment.
double recompute_log_z(const RunResult& result);

}  // namespace autopr
