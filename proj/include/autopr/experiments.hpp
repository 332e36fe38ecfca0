#pragma once

// Repeated-realisation studies: each case simulates datasets, runs the
// requested modes on them and aggregates evidence, estimator and beta
// statistics across repetitions.

#include "autopr/models.hpp"
#include "autopr/priors.hpp"
#include "autopr/repartition.hpp"
#include "autopr/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace autopr {

/// One run with its equal-weight resample and the derived evidence.
struct RunAnalysis {
  RunResult result;
  Eigen::MatrixXd equal_weight;  // one column per sample, same layout as params
  std::optional<BetaBounds> bounds;
  bool degenerate_bounds = false;
  double log_z_raw = 0.0;
  double log_z = 0.0;  // corrected in AutoPR mode; NaN if the bounds are degenerate
  double ess = 0.0;
  Eigen::VectorXd theta_hat;  // posterior mean of theta

  bool converged() const { return result.termination == Termination::Converged; }
};

struct AnalysisOptions {
  BetaBoundsMethod bounds_method = BetaBoundsMethod::SampleExtrema;
  double p_lo = 0.01;
  double p_hi = 0.99;
  std::uint64_t resample_seed = 0;
};

/// Runs the sampler and post-processes the result. A stalled run is analysed
/// from its partial archive instead of throwing.
RunAnalysis run_and_analyse(const InferenceProblem& problem, const SamplerConfig& config,
                            const AnalysisOptions& options = {});

/// Number of equal-weight samples drawn from a run: round(Kish ESS), at least 1.
std::size_t equal_weight_count(const RunResult& result);

struct CaseSpec {
  std::string name;
  GaussianMeasurementModel model;
  PriorSpec prior;
  Eigen::VectorXd theta_star;
  std::vector<Mode> modes;
  int repetitions = 10;
  std::uint64_t base_seed = 0;
  double fixed_beta = 1.0;
  std::optional<double> beta_lo;  // defaults to prior.beta_min()
  std::optional<double> beta_hi;  // defaults to 1
  SamplerConfig sampler;          // the seed field is replaced per run
  BetaBoundsMethod bounds_method = BetaBoundsMethod::SampleExtrema;

  void validate() const;
};

std::uint64_t dataset_seed(const CaseSpec& spec, int repetition);
std::uint64_t sampler_seed(std::uint64_t dataset_seed, Mode mode);

InferenceProblem make_problem(const CaseSpec& spec, Mode mode, LogLikelihood like);

struct RepetitionRecord {
  std::string case_name;
  Mode mode = Mode::Standard;
  int repetition = 0;
  std::uint64_t dataset_seed = 0;
  std::uint64_t sampler_seed = 0;
  Termination termination = Termination::Converged;
  bool degenerate_bounds = false;
  double oracle_log_z = 0.0;
  double log_z = 0.0;            // corrected (AutoPR) or raw; NaN if degenerate
  double log_z_uncorrected = 0.0;
  double log_z_error = 0.0;
  double beta_minus = 0.0;       // NaN outside AutoPR mode
  double beta_plus = 0.0;
  long n_like = 0;
  long n_iter = 0;
  long n_outside = 0;
  double ess = 0.0;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd posterior_mean;  // conjugate posterior mean of the dataset
  bool truncation_warning = false;
  // Centred second moments of the equal-weight (beta, theta_k) samples.
  long n_samples = 0;
  double s_bb = 0.0;
  Eigen::VectorXd s_bt;
  Eigen::VectorXd s_tt;

  /// Counted in the case statistics.
  bool ok() const { return termination == Termination::Converged && !degenerate_bounds; }
  /// log Z regardless of failure: corrected when possible, else raw.
  double log_z_as_terminated() const;
  double squared_error_truth(const Eigen::VectorXd& theta_star) const;
  double squared_error_posterior() const;
};

struct ModeStats {
  Mode mode = Mode::Standard;
  int repetitions = 0;
  int n_ok = 0;
  int n_failed = 0;
  double log_z_mean = 0.0;  // over ok repetitions
  double log_z_sd = 0.0;
  double as_terminated_mean = 0.0;  // over all repetitions
  double as_terminated_sd = 0.0;
  double oracle_mean = 0.0;
  double error_mean = 0.0;  // log Z - oracle, ok repetitions
  double error_sd = 0.0;
  double abs_error_median = 0.0;
  double log_z_error_mean = 0.0;
  double rmse_truth = 0.0;      // theta_hat against theta_star
  double rmse_posterior = 0.0;  // theta_hat against the conjugate posterior mean
  double rmse_truth_all = 0.0;  // including failed runs
  double n_like_mean = 0.0;
  long n_like_min = 0;
  long n_like_max = 0;
  double beta_minus_mean = 0.0;
  double beta_plus_mean = 0.0;
  double beta_plus_sd = 0.0;
  /// Pooled within-repetition correlation of beta with each theta component.
  Eigen::VectorXd beta_theta_corr;
};

struct CaseStats {
  std::string name;
  Eigen::VectorXd theta_star;
  std::vector<ModeStats> modes;
  std::vector<RepetitionRecord> records;  // sorted by (mode order, repetition)

  const ModeStats* find(Mode mode) const;
};

/// Looks up and stores finished repetitions so an interrupted suite can
/// resume. Both callbacks are optional.
struct RecordCache {
  std::function<std::optional<RepetitionRecord>(const CaseSpec&, Mode, int)> load;
  std::function<void(const CaseSpec&, const RepetitionRecord&)> store;
};

/// Executes one repetition of one mode. Sampler stalls are recorded, not thrown.
RepetitionRecord run_repetition(const CaseSpec& spec, Mode mode, int repetition);

/// All repetitions and modes of a case on up to `workers` threads.
CaseStats run_case(const CaseSpec& spec, int workers = 1, const RecordCache& cache = {});

/// Statistics from per-repetition records; independent of record order.
CaseStats summarise_case(const CaseSpec& spec, std::vector<RepetitionRecord> records);

struct SuiteOptions {
  int repetitions = 10;
  std::uint64_t base_seed = 20240101;
  SamplerConfig sampler;
  BetaBoundsMethod bounds_method = BetaBoundsMethod::SampleExtrema;
};

enum class Suite { Univariate, BivariateUncorrelated, BivariateCorrelated, HighDim };

std::string_view to_string(Suite suite);

/// theta* in {5, ..., 50}, truncated N(0, 4^2) on [-50, 50], N = 20; standard and AutoPR.
std::vector<CaseSpec> univariate_cases(const SuiteOptions& options = {});
/// theta* = (40, 40), N = 1, diagonal priors (4,4), (2,4), (2,2); AutoPR.
std::vector<CaseSpec> bivariate_uncorrelated_cases(const SuiteOptions& options = {});
/// theta* = (40, 40), N = 1, sigma = 4 with rho in {-0.75, ..., 0.75}; AutoPR.
std::vector<CaseSpec> bivariate_correlated_cases(const SuiteOptions& options = {});
/// K in {3, ..., 10}, theta* = 40 per dimension, sigma = 4, N = 1; AutoPR.
std::vector<CaseSpec> highdim_cases(const SuiteOptions& options = {});

std::vector<CaseSpec> suite_cases(Suite suite, const SuiteOptions& options = {});

}  // namespace autopr
