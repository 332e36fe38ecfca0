#include "autopr/sampler.hpp"

#include "autopr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace autopr {

void SamplerConfig::validate() const {
  if (n_live < 2) throw std::invalid_argument("n_live must be at least 2");
  if (!(efr > 0.0 && efr <= 1.0)) throw std::invalid_argument("efr must lie in (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (max_draw_attempts < 1) throw std::invalid_argument("max_draw_attempts must be positive");
  if (max_outside_draws < 1) throw std::invalid_argument("max_outside_draws must be positive");
  if (!(ridge > 0.0)) throw std::invalid_argument("ridge must be positive");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::Plateau: return "plateau";
    case Termination::Stalled: return "stalled";
    case Termination::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

const Eigen::VectorXd& RunResult::params(std::size_t j) const {
  return j < dead.size() ? dead[j].params : final_live[j - dead.size()].params;
}

double RunResult::log_like(std::size_t j) const {
  return j < dead.size() ? dead[j].log_like : final_live[j - dead.size()].log_like;
}

SamplerStalled::SamplerStalled(const std::string& what, RunResult partial)
    : std::runtime_error(what), partial_(std::move(partial)) {}

LivePoint evaluate_point(const InferenceProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const JointPoint joint = joint_transform(problem, u);
  LivePoint p;
  p.u = u;
  p.log_like = log_effective_likelihood(problem, joint.theta, joint.beta);
  p.params = pack_params(problem, joint);
  return p;
}

std::optional<LivePoint> draw_constrained(std::span<const LivePoint> live, double threshold,
                                          const InferenceProblem& problem, const SamplerConfig& config, Rng& rng,
                                          DrawTally& tally) {
  const Eigen::Index dim = problem.cube_dimension();
  if (static_cast<Eigen::Index>(live.size()) < dim + 1)
    throw std::invalid_argument("draw_constrained needs at least dim + 1 live points");

  Eigen::MatrixXd points(dim, static_cast<Eigen::Index>(live.size()));
  for (std::size_t j = 0; j < live.size(); ++j) points.col(static_cast<Eigen::Index>(j)) = live[j].u;

  const Ellipsoid<double> bound = bounding_ellipsoid(points, 1.0, config.ridge);

  double enlargement = 1.0 / config.efr;
  for (int stage = 0; stage < 4; ++stage, enlargement *= 2.0) {
    const Ellipsoid<double> ell = bound.scaled_volume(enlargement);
    long misses = 0;
    for (int attempt = 0; attempt < config.max_draw_attempts && misses < config.max_outside_draws;) {
      const auto u = sample_in_ellipsoid(ell, rng);
      if (!u) {
        ++misses;
        ++tally.n_outside;
        continue;
      }
      ++attempt;
      LivePoint candidate = evaluate_point(problem, *u);
      ++tally.n_like;
      if (candidate.log_like > threshold) return candidate;
    }
  }
  return std::nullopt;
}

namespace {

void finalize(RunResult& res, std::vector<LivePoint> live, double log_x, Termination termination) {
  res.termination = termination;
  res.final_live = std::move(live);
  res.final_live_log_weight = log_x - std::log(static_cast<double>(std::max<std::size_t>(res.final_live.size(), 1)));
  res.log_z = recompute_log_z(res);

  res.log_importance.clear();
  res.log_importance.reserve(res.size());
  for (const auto& d : res.dead) res.log_importance.push_back(d.log_like + d.log_weight - res.log_z);
  for (const auto& p : res.final_live) res.log_importance.push_back(p.log_like + res.final_live_log_weight - res.log_z);
  res.log_z_error = log_z_error(res);
}

}  // namespace

RunResult run(const InferenceProblem& problem, const SamplerConfig& config) {
  problem.validate();
  config.validate();
  const Eigen::Index dim = problem.cube_dimension();
  const int n_live = config.n_live;
  if (n_live < dim + 1) throw std::invalid_argument("n_live must be at least the cube dimension + 1");

  Rng rng(config.seed);
  std::uniform_real_distribution<double> uniform;

  RunResult res;
  res.n_live = n_live;
  res.has_beta = problem.mode == Mode::AutoPR;

  std::vector<LivePoint> live;
  live.reserve(static_cast<std::size_t>(n_live));
  Eigen::VectorXd u(dim);
  for (int n = 0; n < n_live; ++n) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      do {
        u[k] = uniform(rng);
      } while (u[k] == 0.0);
    }
    live.push_back(evaluate_point(problem, u));
    ++res.n_like;
  }

  const double inv_n = 1.0 / static_cast<double>(n_live);
  // w_i = (X_{i-1} - X_{i+1}) / 2 = exp(-(i-1)/N) * (1 - exp(-2/N)) / 2
  const double log_w_base = std::log(0.5) + std::log(-std::expm1(-2.0 * inv_n));
  const double log_tol = std::log(config.tol);
  double log_z = -kInf;

  for (long i = 1;; ++i) {
    const double log_x = -static_cast<double>(i) * inv_n;
    if (i > config.max_iterations) {
      res.n_iter = i - 1;
      finalize(res, std::move(live), -static_cast<double>(i - 1) * inv_n, Termination::MaxIterations);
      throw SamplerStalled("nested sampling exceeded max_iterations", std::move(res));
    }

    // Ties go to the lowest index.
    std::size_t worst = 0;
    double top = live[0].log_like;
    for (std::size_t j = 1; j < live.size(); ++j) {
      if (live[j].log_like < live[worst].log_like) worst = j;
      top = std::max(top, live[j].log_like);
    }
    const double threshold = live[worst].log_like;

    if (threshold == top && threshold > -kInf) {
      res.n_iter = i - 1;
      finalize(res, std::move(live), -static_cast<double>(i - 1) * inv_n, Termination::Plateau);
      return res;
    }
    const double log_w = -static_cast<double>(i - 1) * inv_n + log_w_base;
    res.dead.push_back({live[worst].params, threshold, log_w, i});
    if (threshold > -kInf) log_z = log_add_exp(log_z, threshold + log_w);

    DrawTally tally;
    auto replacement = draw_constrained(live, threshold, problem, config, rng, tally);
    res.n_like += tally.n_like;
    res.n_outside += tally.n_outside;
    if (!replacement) {
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(worst));
      res.n_iter = i;
      finalize(res, std::move(live), log_x, Termination::Stalled);
      throw SamplerStalled("no replacement above log-likelihood " + std::to_string(threshold) + " at iteration " +
                               std::to_string(i),
                           std::move(res));
    }
    live[worst] = std::move(*replacement);

    double max_live = -kInf;
    for (const auto& p : live) max_live = std::max(max_live, p.log_like);
    if (log_z > -kInf && max_live + log_x < log_tol + log_z) {
      res.n_iter = i;
      finalize(res, std::move(live), log_x, Termination::Converged);
      return res;
    }
  }
}

double recompute_log_z(const RunResult& result) {
  std::vector<double> terms;
  terms.reserve(result.size());
  for (const auto& d : result.dead) terms.push_back(d.log_like + d.log_weight);
  for (const auto& p : result.final_live) terms.push_back(p.log_like + result.final_live_log_weight);
  return log_sum_exp(terms);
}

namespace {

void check_normalized(const RunResult& result) {
  if (result.log_importance.size() != result.size())
    throw InternalInvariantError("importance weights do not cover the archive");
  double total = 0.0;
  for (double lp : result.log_importance) total += std::exp(lp);
  if (!(std::abs(total - 1.0) <= 1e-10))
    throw InternalInvariantError("importance weights sum to " + std::to_string(total) + ", not 1");
}

}  // namespace

Eigen::MatrixXd equal_weight_samples(const RunResult& result, std::size_t count, Rng& rng) {
  check_normalized(result);
  if (count == 0) throw std::invalid_argument("sample count must be positive");
  const Eigen::Index dim = result.params(0).size();
  Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(count));

  std::uniform_real_distribution<double> uniform;
  const double step = 1.0 / static_cast<double>(count);
  double position = uniform(rng) * step;
  double cumulative = std::exp(result.log_importance[0]);
  std::size_t j = 0;
  const std::size_t last = result.size() - 1;
  for (std::size_t s = 0; s < count; ++s) {
    while (position > cumulative && j < last) {
      ++j;
      cumulative += std::exp(result.log_importance[j]);
    }
    out.col(static_cast<Eigen::Index>(s)) = result.params(j);
    position += step;
  }
  return out;
}

double effective_sample_size(const RunResult& result) {
  double sum_sq = 0.0;
  for (double lp : result.log_importance) sum_sq += std::exp(2.0 * lp);
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

double log_z_error(const RunResult& result) {
  double h = 0.0;
  for (std::size_t j = 0; j < result.log_importance.size(); ++j) {
    const double lp = result.log_importance[j];
    const double ll = result.log_like(j);
    if (lp == -kInf || ll == -kInf) continue;
    h += std::exp(lp) * (ll - result.log_z);
  }
  if (result.n_live <= 0) return 0.0;
  return std::sqrt(std::max(h, 0.0) / static_cast<double>(result.n_live));
}

Eigen::VectorXd posterior_mean(const RunResult& result) {
  check_normalized(result);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(result.params(0).size());
  for (std::size_t j = 0; j < result.size(); ++j) mean += std::exp(result.log_importance[j]) * result.params(j);
  return mean;
}

}  // namespace autopr
