#include "autopr/config.hpp"
#include "autopr/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace autopr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("autopr_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error_key(const Json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

Json minimal_run() {
  return Json::parse(R"({"prior": {"kind": "truncated-gaussian-diagonal", "mean": [0], "scale": [4]}, "theta_star": [5]})");
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 123456789.123456789, -99.14610000001}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Io, JsonNumbersMapNonFiniteToNull) {
  EXPECT_TRUE(json_number(std::nan("")).is_null());
  EXPECT_TRUE(std::isnan(json_to_double(Json(nullptr))));
  EXPECT_EQ(json_to_double(json_number(2.5)), 2.5);
}

TEST(Io, CsvWriterChecksColumnCount) {
  CsvWriter w({"a", "b"});
  w.row({"1", "2"});
  EXPECT_EQ(w.str(), "a,b\n1,2\n");
  EXPECT_THROW(w.row({"1"}), std::invalid_argument);
}

TEST(Io, AtomicWriteLeavesOnlyTarget) {
  const fs::path dir = scratch_dir("atomic");
  write_text_atomic(dir / "x.txt", "first");
  write_text_atomic(dir / "x.txt", "second");
  EXPECT_EQ(slurp(dir / "x.txt"), "second");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
  fs::remove_all(dir);
}

TEST(Io, RecordRoundTrip) {
  RepetitionRecord r;
  r.case_name = "theta_star_50";
  r.mode = Mode::Standard;
  r.repetition = 3;
  r.dataset_seed = 18446744073709551557ULL;
  r.sampler_seed = 42;
  r.termination = Termination::Plateau;
  r.log_z = -123.456789012345678;
  r.log_z_uncorrected = r.log_z;
  r.beta_minus = std::nan("");
  r.beta_plus = std::nan("");
  r.n_like = 123456;
  r.theta_hat = Eigen::VectorXd::Constant(1, 0.1);
  r.posterior_mean = Eigen::VectorXd::Constant(1, 0.2);
  r.s_bt = Eigen::VectorXd::Constant(1, 0.3);
  r.s_tt = Eigen::VectorXd::Constant(1, 0.4);

  const RepetitionRecord back = record_from_json(Json::parse(to_json(r).dump()));
  EXPECT_EQ(back.case_name, r.case_name);
  EXPECT_EQ(back.mode, r.mode);
  EXPECT_EQ(back.dataset_seed, r.dataset_seed);
  EXPECT_EQ(back.termination, Termination::Plateau);
  EXPECT_EQ(back.log_z, r.log_z);
  EXPECT_TRUE(std::isnan(back.beta_plus));
  EXPECT_EQ(back.n_like, r.n_like);
  EXPECT_EQ(back.theta_hat, r.theta_hat);
  EXPECT_EQ(back.s_tt, r.s_tt);
  EXPECT_FALSE(back.ok());
}

TEST(Io, DeadPointsFileLayout) {
  RunResult r;
  r.dead.push_back({Eigen::Vector2d(0.5, 1.5), -2.0, -3.0, 1});
  r.dead.push_back({Eigen::Vector2d(0.25, 2.5), -1.0, -4.0, 2});
  LivePoint p;
  p.params = Eigen::Vector2d(0.75, 3.0);
  p.log_like = -0.5;
  r.final_live.push_back(p);
  r.final_live_log_weight = -5.0;
  const fs::path dir = scratch_dir("dead");
  write_dead_points(dir / "dead.csv", r, {"beta", "theta_1"});
  std::istringstream in(slurp(dir / "dead.csv"));
  std::string header, first, second, live;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  std::getline(in, live);
  EXPECT_EQ(header.rfind("iteration,log_like,log_weight", 0), 0u);
  EXPECT_NE(header.find("beta,theta_1"), std::string::npos);
  EXPECT_EQ(first.rfind("1,", 0), 0u);
  EXPECT_EQ(live.rfind("-1,", 0), 0u);
  fs::remove_all(dir);
}

TEST(Config, MinimalRunUsesDefaults) {
  const RunConfig c = parse_run_config(minimal_run());
  EXPECT_EQ(c.mode, Mode::AutoPR);
  EXPECT_EQ(c.sampler.n_live, SamplerConfig{}.n_live);
  EXPECT_EQ(c.model.n_measurements, 1);
  EXPECT_EQ(c.prior.lower()[0], -50.0);
  EXPECT_EQ(c.prior.upper()[0], 50.0);
  EXPECT_TRUE(c.emit.dead_points);
}

TEST(Config, PriorKindAliases) {
  for (const char* kind : {"truncated", "truncated-gaussian-diagonal"}) {
    Json j = minimal_run();
    j["prior"]["kind"] = kind;
    EXPECT_EQ(parse_run_config(j).prior.kind(), PriorKind::TruncatedGaussianDiagonal) << kind;
  }
  const PriorSpec u = parse_prior(Json::parse(R"({"kind": "uniform", "lower": [0, 0], "upper": [1, 2]})"));
  EXPECT_EQ(u.kind(), PriorKind::UniformBox);
}

TEST(Config, UnknownKeysNamedByPath) {
  Json j = minimal_run();
  j["sampler"] = {{"nlive", 100}};
  EXPECT_EQ(config_error_key(j), "sampler.nlive");
  j = minimal_run();
  j["prior"]["bogus"] = 1;
  EXPECT_EQ(config_error_key(j), "prior.bogus");
  j = minimal_run();
  j["emit"] = {{"plots", true}};
  EXPECT_EQ(config_error_key(j), "emit.plots");
  j = minimal_run();
  j["thetastar"] = 3;
  EXPECT_EQ(config_error_key(j), "thetastar");
}

TEST(Config, InvalidValuesRejected) {
  Json j = minimal_run();
  j["sampler"] = {{"n_live", 1}};
  EXPECT_EQ(config_error_key(j), "sampler");
  j = minimal_run();
  j["sampler"] = {{"efr", "high"}};
  EXPECT_EQ(config_error_key(j), "sampler.efr");
  j = minimal_run();
  j["mode"] = "annealed";
  EXPECT_EQ(config_error_key(j), "mode");
  j = minimal_run();
  j["theta_star"] = {1, 2};
  EXPECT_EQ(config_error_key(j), "theta_star");
  j = minimal_run();
  j["data_seed"] = -1;
  EXPECT_EQ(config_error_key(j), "data_seed");
}

TEST(Config, SweepValidation) {
  try {
    parse_sweep_config(Json::parse(R"({"cases": []})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cases");
  }
  const Json one = Json::parse(R"({"cases": [{"name": "a", "theta_star": [10],
      "prior": {"kind": "truncated-gaussian-diagonal", "mean": [0], "scale": [4]},
      "model": {"n_measurements": 20}, "modes": ["autopr"], "repetitions": 2, "sampler": {"n_live": 50}}]})");
  const SweepConfig s = parse_sweep_config(one);
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_EQ(s.cases[0].repetitions, 2);
  EXPECT_EQ(s.cases[0].model.n_measurements, 20);
  EXPECT_EQ(s.cases[0].sampler.n_live, 50);
  EXPECT_EQ(s.cases[0].modes, std::vector<Mode>{Mode::AutoPR});

  Json dup = one;
  dup["cases"].push_back(one["cases"][0]);
  try {
    parse_sweep_config(dup);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cases");
  }
  Json bad = one;
  bad["cases"][0]["sampler"]["tolerance"] = 0.1;
  try {
    parse_sweep_config(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "cases[0].sampler.tolerance");
  }
}

TEST(Config, RunConfigRoundTrip) {
  Json j = minimal_run();
  j["sampler"] = {{"n_live", 250}, {"seed", 9}};
  j["mode"] = "standard";
  const RunConfig a = parse_run_config(j);
  const RunConfig b = parse_run_config(to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(b.sampler.n_live, 250);
  EXPECT_EQ(b.mode, Mode::Standard);
}
