#include "autopr/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

namespace autopr {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(join(path, key), "unknown key");
  }
}

const Json& require(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required key");
  return j.at(key);
}

double get_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

long get_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long>();
}

std::uint64_t get_seed(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long>() < 0))
    throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd get_vector(const Json& j, const std::string& path) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_double(j[i], path);
  return v;
}

Eigen::MatrixXd get_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = get_vector(j[r], path);
    if (row.size() != m.cols()) throw ConfigError(path, "rows have different lengths");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

template <typename F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

Mode parse_mode(const Json& j, const std::string& path) {
  const std::string s = get_string(j, path);
  return wrap(path, [&] { return mode_from_string(s); });
}

void parse_beta_range(const Json& j, const std::string& path, std::optional<double>& lo, std::optional<double>& hi) {
  const Eigen::VectorXd r = get_vector(j, path);
  if (r.size() != 2) throw ConfigError(path, "expected [beta_lo, beta_hi]");
  lo = r[0];
  hi = r[1];
}

AnalysisOptions parse_beta_bounds(const Json& j, const std::string& path) {
  AnalysisOptions a;
  if (j.is_string()) {
    a.bounds_method = wrap(path, [&] { return beta_bounds_method_from_string(j.get<std::string>()); });
    return a;
  }
  check_object(j, path, {"method", "p_lo", "p_hi"});
  if (j.contains("method")) {
    const std::string s = get_string(j.at("method"), join(path, "method"));
    a.bounds_method = wrap(join(path, "method"), [&] { return beta_bounds_method_from_string(s); });
  }
  if (j.contains("p_lo")) a.p_lo = get_double(j.at("p_lo"), join(path, "p_lo"));
  if (j.contains("p_hi")) a.p_hi = get_double(j.at("p_hi"), join(path, "p_hi"));
  if (!(0.0 <= a.p_lo && a.p_lo < a.p_hi && a.p_hi <= 1.0))
    throw ConfigError(path, "percentiles must satisfy 0 <= p_lo < p_hi <= 1");
  return a;
}

CaseSpec parse_case(const Json& j, const std::string& path, int index) {
  check_object(j, path,
               {"name", "prior", "model", "theta_star", "modes", "repetitions", "base_seed", "fixed_beta",
                "beta_range", "sampler", "beta_bounds"});
  const Eigen::VectorXd theta_star = get_vector(require(j, path, "theta_star"), join(path, "theta_star"));
  PriorSpec prior = parse_prior(require(j, path, "prior"), join(path, "prior"));
  GaussianMeasurementModel model =
      parse_model(j.contains("model") ? j.at("model") : Json::object(), theta_star.size(), join(path, "model"));
  std::vector<Mode> modes{Mode::Standard, Mode::AutoPR};
  if (j.contains("modes")) {
    const Json& m = j.at("modes");
    if (!m.is_array() || m.empty()) throw ConfigError(join(path, "modes"), "expected a non-empty array of modes");
    modes.clear();
    for (const auto& x : m) modes.push_back(parse_mode(x, join(path, "modes")));
  }
  CaseSpec c{.name = j.contains("name") ? get_string(j.at("name"), join(path, "name")) : "case_" + std::to_string(index),
             .model = std::move(model),
             .prior = std::move(prior),
             .theta_star = theta_star,
             .modes = std::move(modes),
             .repetitions = 10,
             .base_seed = SuiteOptions{}.base_seed,
             .fixed_beta = 1.0,
             .beta_lo = std::nullopt,
             .beta_hi = std::nullopt,
             .sampler = {},
             .bounds_method = BetaBoundsMethod::SampleExtrema};
  if (j.contains("repetitions"))
    c.repetitions = static_cast<int>(get_integer(j.at("repetitions"), join(path, "repetitions")));
  if (j.contains("base_seed")) c.base_seed = get_seed(j.at("base_seed"), join(path, "base_seed"));
  if (j.contains("fixed_beta")) c.fixed_beta = get_double(j.at("fixed_beta"), join(path, "fixed_beta"));
  if (j.contains("beta_range")) parse_beta_range(j.at("beta_range"), join(path, "beta_range"), c.beta_lo, c.beta_hi);
  if (j.contains("sampler")) c.sampler = parse_sampler(j.at("sampler"), join(path, "sampler"));
  if (j.contains("beta_bounds")) c.bounds_method = parse_beta_bounds(j.at("beta_bounds"), join(path, "beta_bounds")).bounds_method;
  wrap(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : "'" + key + "': " + message), key_(std::move(key)) {}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "malformed JSON in " + path.string() + ": " + e.what());
  }
}

PriorSpec parse_prior(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string kind_name = get_string(require(j, path, "kind"), join(path, "kind"));
  const PriorKind kind = wrap(join(path, "kind"), [&] { return prior_kind_from_string(kind_name); });
  switch (kind) {
    case PriorKind::TruncatedGaussianDiagonal: {
      check_object(j, path, {"kind", "mean", "scale", "lower", "upper"});
      const Eigen::VectorXd mean = get_vector(require(j, path, "mean"), join(path, "mean"));
      Eigen::VectorXd scale = get_vector(require(j, path, "scale"), join(path, "scale"));
      if (scale.size() == 1 && mean.size() > 1) scale = Eigen::VectorXd::Constant(mean.size(), scale[0]);
      auto bound = [&](const char* key, double fallback) {
        if (!j.contains(key)) return Eigen::VectorXd::Constant(mean.size(), fallback).eval();
        Eigen::VectorXd v = get_vector(j.at(key), join(path, key));
        if (v.size() == 1 && mean.size() > 1) v = Eigen::VectorXd::Constant(mean.size(), v[0]);
        return v;
      };
      const Eigen::VectorXd lower = bound("lower", -kDefaultSupportHalfWidth);
      const Eigen::VectorXd upper = bound("upper", kDefaultSupportHalfWidth);
      return wrap(path, [&] { return PriorSpec::truncated_gaussian(mean, scale, lower, upper); });
    }
    case PriorKind::GaussianFullCovariance: {
      check_object(j, path, {"kind", "mean", "covariance", "beta_min"});
      const Eigen::VectorXd mean = get_vector(require(j, path, "mean"), join(path, "mean"));
      const Eigen::MatrixXd cov = get_matrix(require(j, path, "covariance"), join(path, "covariance"));
      const double beta_min =
          j.contains("beta_min") ? get_double(j.at("beta_min"), join(path, "beta_min")) : kDefaultBetaMin;
      return wrap(path, [&] { return PriorSpec::gaussian(mean, cov, beta_min); });
    }
    case PriorKind::UniformBox: {
      check_object(j, path, {"kind", "lower", "upper"});
      const Eigen::VectorXd lower = get_vector(require(j, path, "lower"), join(path, "lower"));
      const Eigen::VectorXd upper = get_vector(require(j, path, "upper"), join(path, "upper"));
      return wrap(path, [&] { return PriorSpec::uniform(lower, upper); });
    }
  }
  throw ConfigError(path, "unknown prior kind");
}

GaussianMeasurementModel parse_model(const Json& j, Eigen::Index dimension, const std::string& path) {
  check_object(j, path, {"dimension", "n_measurements", "noise_sigma", "noise_mean", "noise_cov"});
  if (j.contains("dimension") && get_integer(j.at("dimension"), join(path, "dimension")) != dimension)
    throw ConfigError(join(path, "dimension"), "differs from theta_star");
  if (j.contains("noise_sigma") && j.contains("noise_cov"))
    throw ConfigError(join(path, "noise_cov"), "give either noise_sigma or noise_cov, not both");
  const long n = j.contains("n_measurements") ? get_integer(j.at("n_measurements"), join(path, "n_measurements")) : 1;
  const double sigma = j.contains("noise_sigma") ? get_double(j.at("noise_sigma"), join(path, "noise_sigma")) : 1.0;
  return wrap(path, [&] {
    GaussianMeasurementModel m = GaussianMeasurementModel::isotropic(dimension, n, sigma);
    if (j.contains("noise_mean")) m.noise_mean = get_vector(j.at("noise_mean"), join(path, "noise_mean"));
    if (j.contains("noise_cov")) m.noise_cov = get_matrix(j.at("noise_cov"), join(path, "noise_cov"));
    m.validate();
    return m;
  });
}

SamplerConfig parse_sampler(const Json& j, const std::string& path) {
  check_object(j, path,
               {"n_live", "efr", "tol", "max_iterations", "max_draw_attempts", "max_outside_draws", "seed", "ridge"});
  SamplerConfig c;
  if (j.contains("n_live")) c.n_live = static_cast<int>(get_integer(j.at("n_live"), join(path, "n_live")));
  if (j.contains("efr")) c.efr = get_double(j.at("efr"), join(path, "efr"));
  if (j.contains("tol")) c.tol = get_double(j.at("tol"), join(path, "tol"));
  if (j.contains("max_iterations")) c.max_iterations = get_integer(j.at("max_iterations"), join(path, "max_iterations"));
  if (j.contains("max_draw_attempts"))
    c.max_draw_attempts = static_cast<int>(get_integer(j.at("max_draw_attempts"), join(path, "max_draw_attempts")));
  if (j.contains("max_outside_draws"))
    c.max_outside_draws = get_integer(j.at("max_outside_draws"), join(path, "max_outside_draws"));
  if (j.contains("seed")) c.seed = get_seed(j.at("seed"), join(path, "seed"));
  if (j.contains("ridge")) c.ridge = get_double(j.at("ridge"), join(path, "ridge"));
  wrap(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

InferenceProblem RunConfig::problem(LogLikelihood like) const {
  switch (mode) {
    case Mode::Standard:
      return make_standard_problem(prior, std::move(like));
    case Mode::FixedBeta:
      return make_fixed_beta_problem(prior, std::move(like), fixed_beta);
    case Mode::AutoPR:
      return make_auto_pr_problem(prior, std::move(like), beta_lo.value_or(prior.beta_min()), beta_hi.value_or(1.0));
  }
  throw ConfigError("mode", "unknown mode");
}

RunConfig parse_run_config(const Json& j) {
  check_object(j, "",
               {"prior", "model", "theta_star", "mode", "fixed_beta", "beta_range", "sampler", "beta_bounds",
                "data_seed", "output", "emit"});
  const Eigen::VectorXd theta_star = get_vector(require(j, "", "theta_star"), "theta_star");
  RunConfig c{.prior = parse_prior(require(j, "", "prior"), "prior"),
              .model = parse_model(j.contains("model") ? j.at("model") : Json::object(), theta_star.size(), "model"),
              .theta_star = theta_star};
  if (c.prior.dimension() != theta_star.size()) throw ConfigError("theta_star", "dimension differs from the prior");
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode"), "mode");
  if (j.contains("fixed_beta")) c.fixed_beta = get_double(j.at("fixed_beta"), "fixed_beta");
  if (j.contains("beta_range")) parse_beta_range(j.at("beta_range"), "beta_range", c.beta_lo, c.beta_hi);
  if (j.contains("sampler")) c.sampler = parse_sampler(j.at("sampler"), "sampler");
  if (j.contains("beta_bounds")) c.analysis = parse_beta_bounds(j.at("beta_bounds"), "beta_bounds");
  if (j.contains("data_seed")) c.data_seed = get_seed(j.at("data_seed"), "data_seed");
  if (j.contains("output")) c.output = get_string(j.at("output"), "output");
  if (j.contains("emit")) {
    const Json& e = j.at("emit");
    check_object(e, "emit", {"dataset", "dead_points", "equal_weights"});
    if (e.contains("dataset")) c.emit.dataset = get_bool(e.at("dataset"), "emit.dataset");
    if (e.contains("dead_points")) c.emit.dead_points = get_bool(e.at("dead_points"), "emit.dead_points");
    if (e.contains("equal_weights")) c.emit.equal_weights = get_bool(e.at("equal_weights"), "emit.equal_weights");
  }
  return c;
}

SweepConfig parse_sweep_config(const Json& j) {
  check_object(j, "", {"cases", "workers", "output"});
  SweepConfig s;
  const Json& cases = require(j, "", "cases");
  if (!cases.is_array()) throw ConfigError("cases", "expected an array of cases");
  if (cases.empty()) throw ConfigError("cases", "the case list is empty");
  for (std::size_t i = 0; i < cases.size(); ++i)
    s.cases.push_back(parse_case(cases[i], "cases[" + std::to_string(i) + "]", static_cast<int>(i)));
  for (std::size_t a = 0; a < s.cases.size(); ++a)
    for (std::size_t b = a + 1; b < s.cases.size(); ++b)
      if (s.cases[a].name == s.cases[b].name) throw ConfigError("cases", "duplicate case name '" + s.cases[a].name + "'");
  if (j.contains("workers")) s.workers = static_cast<int>(get_integer(j.at("workers"), "workers"));
  if (s.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (j.contains("output")) s.output = get_string(j.at("output"), "output");
  return s;
}

Json to_json(const RunConfig& c) {
  Json j{{"prior", to_json(c.prior)},
         {"model", to_json(c.model)},
         {"theta_star", json_vector(c.theta_star)},
         {"mode", std::string(to_string(c.mode))}};
  if (c.mode == Mode::FixedBeta) j["fixed_beta"] = c.fixed_beta;
  if (c.mode == Mode::AutoPR)
    j["beta_range"] = Json::array({c.beta_lo.value_or(c.prior.beta_min()), c.beta_hi.value_or(1.0)});
  j["sampler"] = to_json(c.sampler);
  j["beta_bounds"] = Json{{"method", std::string(to_string(c.analysis.bounds_method))},
                          {"p_lo", c.analysis.p_lo},
                          {"p_hi", c.analysis.p_hi}};
  j["data_seed"] = c.data_seed;
  j["output"] = c.output;
  j["emit"] = Json{{"dataset", c.emit.dataset}, {"dead_points", c.emit.dead_points}, {"equal_weights", c.emit.equal_weights}};
  return j;
}

}  // namespace autopr
