#include "autopr/models.hpp"

#include "autopr/errors.hpp"
#include "autopr/quadrature.hpp"
#include "autopr/special.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace autopr {

GaussianMeasurementModel GaussianMeasurementModel::isotropic(Eigen::Index dimension, Eigen::Index n_measurements,
                                                             double sigma) {
  GaussianMeasurementModel m;
  m.dimension = dimension;
  m.n_measurements = n_measurements;
  m.noise_mean = Eigen::VectorXd::Zero(dimension);
  m.noise_cov = sigma * sigma * Eigen::MatrixXd::Identity(dimension, dimension);
  m.validate();
  return m;
}

void GaussianMeasurementModel::validate() const {
  if (dimension < 1) throw std::invalid_argument("model dimension must be positive");
  if (n_measurements < 1) throw std::invalid_argument("model needs at least one measurement");
  if (noise_mean.size() != dimension) throw std::invalid_argument("noise mean must have the model dimension");
  if (noise_cov.rows() != dimension || noise_cov.cols() != dimension)
    throw std::invalid_argument("noise covariance must be K x K");
  if (!noise_cov.isApprox(noise_cov.transpose(), 1e-12))
    throw std::invalid_argument("noise covariance must be symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(noise_cov).info() != Eigen::Success)
    throw std::invalid_argument("noise covariance must be positive definite");
}

bool GaussianMeasurementModel::diagonal_noise() const {
  return noise_cov.isDiagonal(0.0);
}

Dataset simulate_dataset(const GaussianMeasurementModel& model, const Eigen::VectorXd& theta_star,
                         std::uint64_t seed) {
  model.validate();
  if (theta_star.size() != model.dimension) throw std::invalid_argument("theta_star must have the model dimension");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(model.noise_cov).matrixL();

  Dataset data;
  data.theta_star = theta_star;
  data.seed = seed;
  data.measurements.resize(model.n_measurements, model.dimension);
  Eigen::VectorXd z(model.dimension);
  for (Eigen::Index n = 0; n < model.n_measurements; ++n) {
    for (Eigen::Index k = 0; k < model.dimension; ++k) z[k] = normal(rng);
    data.measurements.row(n) = (theta_star + model.noise_mean + chol * z).transpose();
  }
  return data;
}

namespace {

void check_data(const GaussianMeasurementModel& model, const Dataset& data) {
  if (data.measurements.cols() != model.dimension || data.measurements.rows() != model.n_measurements)
    throw std::invalid_argument("dataset shape does not match the model");
}

}  // namespace

double log_likelihood(const GaussianMeasurementModel& model, const Dataset& data,
                      const Eigen::Ref<const Eigen::VectorXd>& theta) {
  check_data(model, data);
  if (theta.size() != model.dimension) throw std::invalid_argument("theta must have the model dimension");
  const Eigen::LLT<Eigen::MatrixXd> llt(model.noise_cov);
  const Eigen::MatrixXd chol = llt.matrixL();
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  const auto k = static_cast<double>(model.dimension);
  double total = 0.0;
  for (Eigen::Index n = 0; n < model.n_measurements; ++n) {
    const Eigen::VectorXd r = data.measurements.row(n).transpose() - model.noise_mean - theta;
    const Eigen::VectorXd w = chol.triangularView<Eigen::Lower>().solve(r);
    total += -0.5 * (k * kLog2Pi + log_det) - 0.5 * w.squaredNorm();
  }
  return total;
}

GaussianLikelihood::GaussianLikelihood(const GaussianMeasurementModel& model, const Dataset& data) {
  model.validate();
  check_data(model, data);
  chol_ = Eigen::LLT<Eigen::MatrixXd>(model.noise_cov).matrixL();
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  n_ = static_cast<double>(model.n_measurements);
  const Eigen::MatrixXd residuals = data.measurements.rowwise() - model.noise_mean.transpose();
  mean_ = residuals.colwise().mean().transpose();
  scatter_ = 0.0;
  for (Eigen::Index n = 0; n < residuals.rows(); ++n) {
    const Eigen::VectorXd d = residuals.row(n).transpose() - mean_;
    scatter_ += chol_.triangularView<Eigen::Lower>().solve(d).squaredNorm();
  }
  constant_ = -0.5 * n_ * (static_cast<double>(model.dimension) * kLog2Pi + log_det);
}

double GaussianLikelihood::operator()(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  if (theta.size() != mean_.size()) throw std::invalid_argument("theta must have the model dimension");
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(theta - mean_);
  return constant_ - 0.5 * (n_ * w.squaredNorm() + scatter_);
}

LogLikelihood make_log_likelihood(const GaussianMeasurementModel& model, const Dataset& data) {
  return [like = GaussianLikelihood(model, data)](const Eigen::VectorXd& theta) { return like(theta); };
}

PosteriorSummary analytic_posterior(const GaussianMeasurementModel& model, const Dataset& data,
                                    const PriorSpec& prior) {
  model.validate();
  check_data(model, data);
  if (prior.dimension() != model.dimension) throw std::invalid_argument("prior and model dimensions differ");
  const Eigen::Index k = model.dimension;

  Eigen::MatrixXd prior_precision = Eigen::MatrixXd::Zero(k, k);
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal:
      prior_precision.diagonal() = prior.scale().array().square().inverse();
      break;
    case PriorKind::GaussianFullCovariance:
      prior_precision = prior.covariance().inverse();
      break;
    case PriorKind::UniformBox:
      break;
  }
  const Eigen::MatrixXd noise_precision = model.noise_cov.inverse();
  const Eigen::VectorXd mean_residual =
      (data.measurements.rowwise() - model.noise_mean.transpose()).colwise().mean().transpose();
  const double n = static_cast<double>(model.n_measurements);

  const Eigen::MatrixXd precision = prior_precision + n * noise_precision;
  PosteriorSummary out;
  out.covariance = precision.inverse();
  Eigen::VectorXd rhs = n * noise_precision * mean_residual;
  if (prior.kind() != PriorKind::UniformBox) rhs += prior_precision * prior.mean();
  out.mean = precision.ldlt().solve(rhs);

  if (prior.bounded()) {
    double outside = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = std::sqrt(out.covariance(j, j));
      outside += normal_cdf((prior.lower()[j] - out.mean[j]) / s) + normal_sf((prior.upper()[j] - out.mean[j]) / s);
    }
    out.truncation_warning = outside > 1e-6;
  }
  return out;
}

namespace {

struct Window {
  double lo, hi;
};

Window posterior_window(const PriorSpec& prior, const PosteriorSummary& post, Eigen::Index j, double width) {
  const double s = std::sqrt(post.covariance(j, j));
  double lo = post.mean[j] - width * s;
  double hi = post.mean[j] + width * s;
  if (prior.bounded()) {
    lo = std::max(lo, prior.lower()[j]);
    hi = std::min(hi, prior.upper()[j]);
  }
  if (!(lo < hi)) throw UnsupportedConfiguration("posterior lies outside the prior support");
  return {lo, hi};
}

Eigen::VectorXd clamp_to_support(const PriorSpec& prior, Eigen::VectorXd x) {
  if (prior.bounded()) x = x.cwiseMax(prior.lower()).cwiseMin(prior.upper());
  return x;
}

}  // namespace

double quadrature_log_evidence_1d(const GaussianMeasurementModel& model, const Dataset& data,
                                  const PriorSpec& prior) {
  if (model.dimension != 1 || prior.dimension() != 1) throw UnsupportedConfiguration("1D quadrature needs K = 1");
  const GaussianLikelihood like(model, data);
  const PosteriorSummary post = analytic_posterior(model, data, prior);
  const double peak_at = clamp_to_support(prior, post.mean)[0];
  Eigen::VectorXd x(1);
  auto log_integrand = [&](double t) {
    x[0] = t;
    const double lp = log_density(prior, x);
    return lp == -kInf ? -kInf : like(x) + lp;
  };
  const double peak = log_integrand(peak_at);
  auto f = [&](double t) { return std::exp(log_integrand(t) - peak); };

  const double s = std::sqrt(post.covariance(0, 0));
  double lo = prior.bounded() ? prior.lower()[0] : post.mean[0] - 40.0 * s;
  double hi = prior.bounded() ? prior.upper()[0] : post.mean[0] + 40.0 * s;
  // Breakpoints concentrate the adaptive refinement on the likelihood peak.
  std::vector<double> cuts = {lo};
  for (double c : {-20.0, -8.0, 0.0, 8.0, 20.0}) {
    const double t = post.mean[0] + c * s;
    if (t > cuts.back() && t < hi) cuts.push_back(t);
  }
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) total += integrate_adaptive(f, cuts[j], cuts[j + 1], 1e-13).value;
  return peak + std::log(total);
}

double quadrature_log_evidence_2d(const GaussianMeasurementModel& model, const Dataset& data,
                                  const PriorSpec& prior) {
  if (model.dimension != 2 || prior.dimension() != 2) throw UnsupportedConfiguration("2D quadrature needs K = 2");
  const GaussianLikelihood like(model, data);
  const PosteriorSummary post = analytic_posterior(model, data, prior);
  const Window wx = posterior_window(prior, post, 0, 20.0);
  const Window wy = posterior_window(prior, post, 1, 20.0);

  Eigen::VectorXd x = clamp_to_support(prior, post.mean);
  auto log_integrand = [&](const Eigen::VectorXd& t) {
    const double lp = log_density(prior, t);
    return lp == -kInf ? -kInf : like(t) + lp;
  };
  const double peak = log_integrand(x);

  auto inner = [&](double t0) {
    Eigen::VectorXd t(2);
    t[0] = t0;
    auto f = [&](double t1) {
      t[1] = t1;
      return std::exp(log_integrand(t) - peak);
    };
    return integrate_adaptive(f, wy.lo, wy.hi, 1e-11).value;
  };
  const double total = integrate_adaptive(inner, wx.lo, wx.hi, 1e-10).value;
  return peak + std::log(total);
}

double tensor_grid_log_evidence_2d(const GaussianMeasurementModel& model, const Dataset& data,
                                   const PriorSpec& prior, int n) {
  if (model.dimension != 2 || prior.dimension() != 2) throw UnsupportedConfiguration("2D quadrature needs K = 2");
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("grid size must be a positive even number");
  const GaussianLikelihood like(model, data);
  const PosteriorSummary post = analytic_posterior(model, data, prior);
  const Window wx = posterior_window(prior, post, 0, 20.0);
  const Window wy = posterior_window(prior, post, 1, 20.0);
  Eigen::VectorXd t = clamp_to_support(prior, post.mean);
  const double peak = like(t) + log_density(prior, t);

  auto simpson = [&](int m) {
    const double hx = (wx.hi - wx.lo) / m;
    const double hy = (wy.hi - wy.lo) / m;
    auto weight = [m](int i) { return (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
      t[0] = wx.lo + i * hx;
      for (int j = 0; j <= m; ++j) {
        t[1] = wy.lo + j * hy;
        const double lp = log_density(prior, t);
        if (lp == -kInf) continue;
        acc += weight(i) * weight(j) * std::exp(like(t) + lp - peak);
      }
    }
    return acc * hx * hy / 9.0;
  };
  const double coarse = simpson(n);
  const double fine = simpson(2 * n);
  return peak + std::log(fine + (fine - coarse) / 15.0);
}

double closed_form_log_evidence(const GaussianMeasurementModel& model, const Dataset& data, const PriorSpec& prior) {
  if (prior.kind() == PriorKind::UniformBox) throw UnsupportedConfiguration("closed form needs a Gaussian prior");
  const PosteriorSummary post = analytic_posterior(model, data, prior);
  const GaussianLikelihood like(model, data);
  double log_prior;
  if (prior.kind() == PriorKind::GaussianFullCovariance) {
    log_prior = log_density(prior, post.mean);
  } else {
    const auto z = (post.mean - prior.mean()).array() / prior.scale().array();
    log_prior = -0.5 * z.square().sum() - 0.5 * kLog2Pi * static_cast<double>(prior.dimension()) -
                prior.scale().array().log().sum();
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(post.covariance);
  const double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return like(post.mean) + log_prior + 0.5 * static_cast<double>(prior.dimension()) * kLog2Pi + 0.5 * log_det;
}

double oracle_log_evidence(const GaussianMeasurementModel& model, const Dataset& data, const PriorSpec& prior) {
  model.validate();
  check_data(model, data);
  if (prior.dimension() != model.dimension) throw std::invalid_argument("prior and model dimensions differ");
  if (prior.kind() == PriorKind::GaussianFullCovariance) return closed_form_log_evidence(model, data, prior);
  if (model.dimension == 1) return quadrature_log_evidence_1d(model, data, prior);
  if (model.dimension == 2) return quadrature_log_evidence_2d(model, data, prior);
  if (!model.diagonal_noise())
    throw UnsupportedConfiguration("oracle evidence above 2D needs diagonal noise with a diagonal prior");

  // L and pi both factorise over dimensions, so the evidence is a product of 1D integrals.
  double total = 0.0;
  for (Eigen::Index j = 0; j < model.dimension; ++j) {
    GaussianMeasurementModel sub;
    sub.dimension = 1;
    sub.n_measurements = model.n_measurements;
    sub.noise_mean = model.noise_mean.segment(j, 1);
    sub.noise_cov = model.noise_cov.block(j, j, 1, 1);
    Dataset column{data.measurements.col(j), data.theta_star.segment(j, 1), data.seed};
    const PriorSpec marginal =
        prior.kind() == PriorKind::UniformBox
            ? PriorSpec::uniform(prior.lower().segment(j, 1), prior.upper().segment(j, 1))
            : PriorSpec::truncated_gaussian(prior.mean().segment(j, 1), prior.scale().segment(j, 1),
                                            prior.lower().segment(j, 1), prior.upper().segment(j, 1));
    total += quadrature_log_evidence_1d(sub, column, marginal);
  }
  return total;
}

}  // namespace autopr
