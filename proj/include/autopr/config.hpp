#pragma once

// JSON run and sweep configurations. Unknown keys are rejected, and the
// offending key is reported with its full path (e.g. "sampler.nlive").

#include "autopr/experiments.hpp"
#include "autopr/io.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopr {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct EmitOptions {
  bool dataset = true;
  bool dead_points = true;
  bool equal_weights = true;
};

struct RunConfig {
  PriorSpec prior;
  GaussianMeasurementModel model;
  Eigen::VectorXd theta_star;
  Mode mode = Mode::AutoPR;
  double fixed_beta = 1.0;
  std::optional<double> beta_lo{};
  std::optional<double> beta_hi{};
  SamplerConfig sampler{};
  AnalysisOptions analysis{};
  std::uint64_t data_seed = 0;
  std::string output = "run_output";
  EmitOptions emit{};

  InferenceProblem problem(LogLikelihood like) const;
};

struct SweepConfig {
  std::vector<CaseSpec> cases;
  int workers = 1;
  std::string output = "sweep_output";
};

Json read_json_file(const std::filesystem::path& path);

PriorSpec parse_prior(const Json& j, const std::string& path = "prior");
GaussianMeasurementModel parse_model(const Json& j, Eigen::Index dimension, const std::string& path = "model");
SamplerConfig parse_sampler(const Json& j, const std::string& path = "sampler");
RunConfig parse_run_config(const Json& j);
SweepConfig parse_sweep_config(const Json& j);

Json to_json(const RunConfig& config);

}  // namespace autopr
