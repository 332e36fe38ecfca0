#include "autopr/experiments.hpp"

#include "autopr/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace autopr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for fewer than two values.
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int mode_order(const CaseSpec& spec, Mode mode) {
  const auto it = std::find(spec.modes.begin(), spec.modes.end(), mode);
  return static_cast<int>(it - spec.modes.begin());
}

}  // namespace

std::size_t equal_weight_count(const RunResult& result) {
  const double ess = effective_sample_size(result);
  return static_cast<std::size_t>(std::max(1.0, std::round(ess)));
}

RunAnalysis run_and_analyse(const InferenceProblem& problem, const SamplerConfig& config,
                            const AnalysisOptions& options) {
  RunAnalysis a;
  try {
    a.result = run(problem, config);
  } catch (const SamplerStalled& e) {
    a.result = e.partial();
  }
  const RunResult& res = a.result;
  a.log_z_raw = res.log_z;
  a.log_z = res.log_z;
  a.ess = effective_sample_size(res);

  const Eigen::Index k = problem.physical_dimension();
  const Eigen::VectorXd mean = posterior_mean(res);
  a.theta_hat = mean.tail(k);

  Rng rng(options.resample_seed);
  a.equal_weight = equal_weight_samples(res, equal_weight_count(res), rng);

  if (problem.mode == Mode::AutoPR) {
    const Eigen::VectorXd betas = a.equal_weight.row(0).transpose();
    a.bounds = beta_bounds(std::span<const double>(betas.data(), static_cast<std::size_t>(betas.size())),
                           options.bounds_method, options.p_lo, options.p_hi);
    try {
      a.log_z = corrected_log_evidence(res.log_z, *a.bounds, problem.beta_lo, problem.beta_hi);
    } catch (const DegenerateBounds&) {
      a.degenerate_bounds = true;
      a.log_z = kNaN;
    }
  }
  return a;
}

void CaseSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("case name must not be empty");
  if (repetitions < 1) throw std::invalid_argument("case " + name + ": repetitions must be >= 1");
  if (modes.empty()) throw std::invalid_argument("case " + name + ": at least one mode is required");
  model.validate();
  if (prior.dimension() != model.dimension)
    throw std::invalid_argument("case " + name + ": prior and model dimensions differ");
  if (theta_star.size() != model.dimension)
    throw std::invalid_argument("case " + name + ": theta_star has the wrong dimension");
  sampler.validate();
}

std::uint64_t dataset_seed(const CaseSpec& spec, int repetition) {
  return spec.base_seed + static_cast<std::uint64_t>(repetition);
}

std::uint64_t sampler_seed(std::uint64_t dataset_seed, Mode mode) {
  const auto tag = static_cast<std::uint64_t>(mode) + 1;
  return splitmix64(dataset_seed ^ (tag * 0xD1B54A32D192ED03ULL));
}

InferenceProblem make_problem(const CaseSpec& spec, Mode mode, LogLikelihood like) {
  switch (mode) {
    case Mode::Standard:
      return make_standard_problem(spec.prior, std::move(like));
    case Mode::FixedBeta:
      return make_fixed_beta_problem(spec.prior, std::move(like), spec.fixed_beta);
    case Mode::AutoPR:
      return make_auto_pr_problem(spec.prior, std::move(like), spec.beta_lo.value_or(spec.prior.beta_min()),
                                  spec.beta_hi.value_or(1.0));
  }
  throw InternalInvariantError("unknown mode");
}

double RepetitionRecord::log_z_as_terminated() const {
  return std::isnan(log_z) ? log_z_uncorrected : log_z;
}

double RepetitionRecord::squared_error_truth(const Eigen::VectorXd& theta_star) const {
  return (theta_hat - theta_star).squaredNorm() / static_cast<double>(theta_star.size());
}

double RepetitionRecord::squared_error_posterior() const {
  return (theta_hat - posterior_mean).squaredNorm() / static_cast<double>(posterior_mean.size());
}

RepetitionRecord run_repetition(const CaseSpec& spec, Mode mode, int repetition) {
  RepetitionRecord rec;
  rec.case_name = spec.name;
  rec.mode = mode;
  rec.repetition = repetition;
  rec.dataset_seed = dataset_seed(spec, repetition);
  rec.sampler_seed = sampler_seed(rec.dataset_seed, mode);

  const Dataset data = simulate_dataset(spec.model, spec.theta_star, rec.dataset_seed);
  rec.oracle_log_z = oracle_log_evidence(spec.model, data, spec.prior);
  const PosteriorSummary post = analytic_posterior(spec.model, data, spec.prior);
  rec.posterior_mean = post.mean;
  rec.truncation_warning = post.truncation_warning;

  const InferenceProblem problem = make_problem(spec, mode, make_log_likelihood(spec.model, data));
  SamplerConfig config = spec.sampler;
  config.seed = rec.sampler_seed;
  AnalysisOptions options;
  options.bounds_method = spec.bounds_method;
  options.resample_seed = splitmix64(rec.sampler_seed);
  const RunAnalysis a = run_and_analyse(problem, config, options);

  rec.termination = a.result.termination;
  rec.degenerate_bounds = a.degenerate_bounds;
  rec.log_z = a.log_z;
  rec.log_z_uncorrected = a.log_z_raw;
  rec.log_z_error = a.result.log_z_error;
  rec.n_like = a.result.n_like;
  rec.n_iter = a.result.n_iter;
  rec.n_outside = a.result.n_outside;
  rec.ess = a.ess;
  rec.theta_hat = a.theta_hat;
  rec.beta_minus = a.bounds ? a.bounds->beta_minus : kNaN;
  rec.beta_plus = a.bounds ? a.bounds->beta_plus : kNaN;

  const Eigen::Index k = spec.model.dimension;
  rec.n_samples = a.equal_weight.cols();
  rec.s_bt = Eigen::VectorXd::Zero(k);
  rec.s_tt = Eigen::VectorXd::Zero(k);
  if (mode == Mode::AutoPR) {
    const Eigen::MatrixXd& s = a.equal_weight;
    const Eigen::VectorXd centre = s.rowwise().mean();
    const Eigen::MatrixXd c = s.colwise() - centre;
    rec.s_bb = c.row(0).squaredNorm();
    for (Eigen::Index j = 0; j < k; ++j) {
      rec.s_bt[j] = c.row(0).dot(c.row(j + 1));
      rec.s_tt[j] = c.row(j + 1).squaredNorm();
    }
  }
  return rec;
}

const ModeStats* CaseStats::find(Mode mode) const {
  for (const auto& m : modes)
    if (m.mode == mode) return &m;
  return nullptr;
}

CaseStats summarise_case(const CaseSpec& spec, std::vector<RepetitionRecord> records) {
  std::sort(records.begin(), records.end(), [&](const RepetitionRecord& a, const RepetitionRecord& b) {
    const int ma = mode_order(spec, a.mode);
    const int mb = mode_order(spec, b.mode);
    return ma != mb ? ma < mb : a.repetition < b.repetition;
  });

  CaseStats stats;
  stats.name = spec.name;
  stats.theta_star = spec.theta_star;
  const Eigen::Index k = spec.model.dimension;

  for (Mode mode : spec.modes) {
    ModeStats m;
    m.mode = mode;
    std::vector<double> log_z, as_term, oracle, err, abs_err, zerr, bplus, bminus;
    double se_truth = 0.0, se_post = 0.0, se_all = 0.0, nl_sum = 0.0;
    double s_bb = 0.0;
    Eigen::VectorXd s_bt = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd s_tt = Eigen::VectorXd::Zero(k);
    m.n_like_min = std::numeric_limits<long>::max();
    m.n_like_max = 0;
    for (const auto& r : records) {
      if (r.mode != mode) continue;
      ++m.repetitions;
      as_term.push_back(r.log_z_as_terminated());
      oracle.push_back(r.oracle_log_z);
      se_all += r.squared_error_truth(spec.theta_star);
      nl_sum += static_cast<double>(r.n_like);
      m.n_like_min = std::min(m.n_like_min, r.n_like);
      m.n_like_max = std::max(m.n_like_max, r.n_like);
      if (!r.ok()) {
        ++m.n_failed;
        continue;
      }
      ++m.n_ok;
      log_z.push_back(r.log_z);
      err.push_back(r.log_z - r.oracle_log_z);
      abs_err.push_back(std::abs(r.log_z - r.oracle_log_z));
      zerr.push_back(r.log_z_error);
      se_truth += r.squared_error_truth(spec.theta_star);
      se_post += r.squared_error_posterior();
      if (mode == Mode::AutoPR) {
        bplus.push_back(r.beta_plus);
        bminus.push_back(r.beta_minus);
        s_bb += r.s_bb;
        s_bt += r.s_bt;
        s_tt += r.s_tt;
      }
    }
    if (m.repetitions == 0) m.n_like_min = 0;
    m.log_z_mean = mean_of(log_z);
    m.log_z_sd = sd_of(log_z);
    m.as_terminated_mean = mean_of(as_term);
    m.as_terminated_sd = sd_of(as_term);
    m.oracle_mean = mean_of(oracle);
    m.error_mean = mean_of(err);
    m.error_sd = sd_of(err);
    m.abs_error_median = median_of(abs_err);
    m.log_z_error_mean = mean_of(zerr);
    m.rmse_truth = m.n_ok ? std::sqrt(se_truth / m.n_ok) : kNaN;
    m.rmse_posterior = m.n_ok ? std::sqrt(se_post / m.n_ok) : kNaN;
    m.rmse_truth_all = m.repetitions ? std::sqrt(se_all / m.repetitions) : kNaN;
    m.n_like_mean = m.repetitions ? nl_sum / m.repetitions : kNaN;
    m.beta_plus_mean = mean_of(bplus);
    m.beta_plus_sd = sd_of(bplus);
    m.beta_minus_mean = mean_of(bminus);
    m.beta_theta_corr = Eigen::VectorXd::Constant(k, kNaN);
    if (mode == Mode::AutoPR && s_bb > 0.0) {
      for (Eigen::Index j = 0; j < k; ++j)
        if (s_tt[j] > 0.0) m.beta_theta_corr[j] = s_bt[j] / std::sqrt(s_bb * s_tt[j]);
    }
    stats.modes.push_back(std::move(m));
  }
  stats.records = std::move(records);
  return stats;
}

CaseStats run_case(const CaseSpec& spec, int workers, const RecordCache& cache) {
  spec.validate();
  struct Task {
    Mode mode;
    int repetition;
  };
  std::vector<Task> tasks;
  for (Mode mode : spec.modes)
    for (int r = 0; r < spec.repetitions; ++r) tasks.push_back({mode, r});

  std::vector<RepetitionRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        std::optional<RepetitionRecord> hit;
        if (cache.load) hit = cache.load(spec, tasks[i].mode, tasks[i].repetition);
        if (hit) {
          records[i] = std::move(*hit);
          continue;
        }
        records[i] = run_repetition(spec, tasks[i].mode, tasks[i].repetition);
        if (cache.store) {
          std::lock_guard<std::mutex> lock(mutex);
          cache.store(spec, records[i]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  const int n = std::clamp(workers, 1, static_cast<int>(tasks.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return summarise_case(spec, std::move(records));
}

std::string_view to_string(Suite suite) {
  switch (suite) {
    case Suite::Univariate:
      return "univariate";
    case Suite::BivariateUncorrelated:
      return "bivariate-uncorrelated";
    case Suite::BivariateCorrelated:
      return "bivariate-correlated";
    case Suite::HighDim:
      return "highdim";
  }
  return "unknown";
}

namespace {

CaseSpec base_case(std::string name, GaussianMeasurementModel model, PriorSpec prior, Eigen::VectorXd theta_star,
                   std::vector<Mode> modes, const SuiteOptions& options) {
  return CaseSpec{.name = std::move(name),
                  .model = std::move(model),
                  .prior = std::move(prior),
                  .theta_star = std::move(theta_star),
                  .modes = std::move(modes),
                  .repetitions = options.repetitions,
                  .base_seed = options.base_seed,
                  .fixed_beta = 1.0,
                  .beta_lo = std::nullopt,
                  .beta_hi = std::nullopt,
                  .sampler = options.sampler,
                  .bounds_method = options.bounds_method};
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::vector<CaseSpec> univariate_cases(const SuiteOptions& options) {
  std::vector<CaseSpec> cases;
  for (int t = 5; t <= 50; t += 5) {
    cases.push_back(base_case("theta_" + std::to_string(t), GaussianMeasurementModel::isotropic(1, 20),
                              PriorSpec::truncated_gaussian(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 4.0)),
                              Eigen::VectorXd::Constant(1, t), {Mode::Standard, Mode::AutoPR}, options));
  }
  return cases;
}

std::vector<CaseSpec> bivariate_uncorrelated_cases(const SuiteOptions& options) {
  std::vector<CaseSpec> cases;
  for (const auto& [s1, s2] : std::vector<std::pair<double, double>>{{4, 4}, {2, 4}, {2, 2}}) {
    cases.push_back(base_case("sigma_" + format_number(s1) + "_" + format_number(s2),
                              GaussianMeasurementModel::isotropic(2, 1),
                              PriorSpec::truncated_gaussian(Eigen::Vector2d::Zero(), Eigen::Vector2d(s1, s2)),
                              Eigen::Vector2d(40, 40), {Mode::AutoPR}, options));
  }
  return cases;
}

std::vector<CaseSpec> bivariate_correlated_cases(const SuiteOptions& options) {
  std::vector<CaseSpec> cases;
  for (double rho : {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75}) {
    cases.push_back(base_case("rho_" + format_number(rho), GaussianMeasurementModel::isotropic(2, 1),
                              PriorSpec::gaussian(Eigen::Vector2d::Zero(), PriorSpec::bivariate_covariance(4, 4, rho)),
                              Eigen::Vector2d(40, 40), {Mode::AutoPR}, options));
  }
  return cases;
}

std::vector<CaseSpec> highdim_cases(const SuiteOptions& options) {
  std::vector<CaseSpec> cases;
  for (int k = 3; k <= 10; ++k) {
    cases.push_back(base_case("K_" + std::to_string(k), GaussianMeasurementModel::isotropic(k, 1),
                              PriorSpec::truncated_gaussian(Eigen::VectorXd::Zero(k), Eigen::VectorXd::Constant(k, 4.0)),
                              Eigen::VectorXd::Constant(k, 40.0), {Mode::AutoPR}, options));
  }
  return cases;
}

std::vector<CaseSpec> suite_cases(Suite suite, const SuiteOptions& options) {
  switch (suite) {
    case Suite::Univariate:
      return univariate_cases(options);
    case Suite::BivariateUncorrelated:
      return bivariate_uncorrelated_cases(options);
    case Suite::BivariateCorrelated:
      return bivariate_correlated_cases(options);
    case Suite::HighDim:
      return highdim_cases(options);
  }
  throw InternalInvariantError("unknown suite");
}

}  // namespace autopr
