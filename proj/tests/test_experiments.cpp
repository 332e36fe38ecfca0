#include "autopr/experiments.hpp"
#include "autopr/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

using namespace autopr;
namespace fs = std::filesystem;

namespace {

CaseSpec small_case(double theta_star, int repetitions = 3) {
  SuiteOptions opts;
  opts.repetitions = repetitions;
  opts.base_seed = 777;
  for (CaseSpec c : univariate_cases(opts)) {
    if (c.theta_star[0] == theta_star) return c;
  }
  throw std::logic_error("no such case");
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("autopr_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Experiments, SuiteLayouts) {
  const auto uni = univariate_cases();
  ASSERT_EQ(uni.size(), 10u);
  EXPECT_EQ(uni.front().theta_star[0], 5.0);
  EXPECT_EQ(uni.back().theta_star[0], 50.0);
  EXPECT_EQ(uni.front().model.n_measurements, 20);
  EXPECT_EQ(uni.front().modes, (std::vector<Mode>{Mode::Standard, Mode::AutoPR}));
  EXPECT_EQ(uni.front().repetitions, 10);
  EXPECT_EQ(uni.front().sampler.n_live, 100);
  EXPECT_EQ(uni.front().sampler.efr, 0.8);
  EXPECT_EQ(uni.front().sampler.tol, 0.5);

  const auto biv = bivariate_uncorrelated_cases();
  ASSERT_EQ(biv.size(), 3u);
  EXPECT_EQ(biv[1].prior.scale(), Eigen::Vector2d(2, 4));
  EXPECT_EQ(biv[0].theta_star, Eigen::Vector2d(40, 40));
  EXPECT_EQ(biv[0].modes, std::vector<Mode>{Mode::AutoPR});

  const auto cor = bivariate_correlated_cases();
  ASSERT_EQ(cor.size(), 7u);
  EXPECT_NEAR(cor.front().prior.covariance()(0, 1), -0.75 * 16.0, 1e-12);
  EXPECT_EQ(cor.front().prior.kind(), PriorKind::GaussianFullCovariance);

  const auto hd = highdim_cases();
  ASSERT_EQ(hd.size(), 8u);
  EXPECT_EQ(hd.front().prior.dimension(), 3);
  EXPECT_EQ(hd.back().prior.dimension(), 10);
  EXPECT_EQ(hd.back().model.n_measurements, 1);
}

TEST(Experiments, SeedsDerivedFromBaseAndMode) {
  const CaseSpec c = small_case(5.0);
  EXPECT_EQ(dataset_seed(c, 0), 777u);
  EXPECT_EQ(dataset_seed(c, 4), 781u);
  EXPECT_NE(sampler_seed(777, Mode::Standard), sampler_seed(777, Mode::AutoPR));
  EXPECT_NE(sampler_seed(777, Mode::AutoPR), sampler_seed(778, Mode::AutoPR));
  EXPECT_EQ(sampler_seed(777, Mode::AutoPR), sampler_seed(777, Mode::AutoPR));
}

TEST(Experiments, RepetitionRecordFields) {
  const CaseSpec c = small_case(10.0);
  const RepetitionRecord r = run_repetition(c, Mode::AutoPR, 1);
  EXPECT_EQ(r.case_name, c.name);
  EXPECT_EQ(r.repetition, 1);
  EXPECT_EQ(r.dataset_seed, dataset_seed(c, 1));
  EXPECT_TRUE(r.ok());
  EXPECT_LE(r.beta_minus, r.beta_plus);
  EXPECT_GE(r.beta_minus, 0.0);
  EXPECT_LE(r.beta_plus, 1.0);
  EXPECT_NEAR(r.log_z - r.log_z_uncorrected, -std::log(r.beta_plus - r.beta_minus), 1e-12);
  EXPECT_EQ(r.theta_hat.size(), 1);
  EXPECT_GT(r.n_samples, 0);
  EXPECT_LT(std::abs(r.log_z - r.oracle_log_z), 1.0);

  const RepetitionRecord s = run_repetition(c, Mode::Standard, 1);
  EXPECT_TRUE(std::isnan(s.beta_plus));
  EXPECT_EQ(s.log_z, s.log_z_uncorrected);
  EXPECT_EQ(s.oracle_log_z, r.oracle_log_z);
}

TEST(Experiments, CaseRunIsDeterministicAndWorkerIndependent) {
  const CaseSpec c = small_case(20.0);
  const CaseStats a = run_case(c, 1);
  const CaseStats b = run_case(c, 1);
  const CaseStats p = run_case(c, 3);
  ASSERT_EQ(a.records.size(), 6u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].log_z, b.records[i].log_z);
    EXPECT_EQ(a.records[i].log_z, p.records[i].log_z);
    EXPECT_EQ(a.records[i].n_like, p.records[i].n_like);
    EXPECT_EQ(a.records[i].mode, p.records[i].mode);
    EXPECT_EQ(a.records[i].repetition, p.records[i].repetition);
  }
  ASSERT_EQ(a.modes.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(a.modes[m].log_z_mean, p.modes[m].log_z_mean);
    EXPECT_EQ(a.modes[m].rmse_truth, p.modes[m].rmse_truth);
  }
}

TEST(Experiments, SummaryIndependentOfRecordOrder) {
  const CaseSpec c = small_case(15.0, 4);
  const CaseStats a = run_case(c, 1);
  std::vector<RepetitionRecord> shuffled = a.records;
  std::mt19937 rng(5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const CaseStats b = summarise_case(c, shuffled);
  for (std::size_t m = 0; m < a.modes.size(); ++m) {
    EXPECT_EQ(a.modes[m].log_z_mean, b.modes[m].log_z_mean);
    EXPECT_EQ(a.modes[m].log_z_sd, b.modes[m].log_z_sd);
    EXPECT_EQ(a.modes[m].rmse_truth, b.modes[m].rmse_truth);
    EXPECT_EQ(a.modes[m].n_like_max, b.modes[m].n_like_max);
  }
}

TEST(Experiments, StatisticsFromRecords) {
  const CaseSpec c = small_case(10.0, 3);
  const CaseStats s = run_case(c, 1);
  const ModeStats* a = s.find(Mode::AutoPR);
  ASSERT_NE(a, nullptr);
  double mean = 0.0, sq = 0.0;
  long lo = 1L << 60, hi = 0;
  for (const auto& r : s.records) {
    if (r.mode != Mode::AutoPR) continue;
    mean += r.log_z / 3.0;
    sq += r.squared_error_truth(c.theta_star) / 3.0;
    lo = std::min(lo, r.n_like);
    hi = std::max(hi, r.n_like);
  }
  EXPECT_NEAR(a->log_z_mean, mean, 1e-12);
  EXPECT_NEAR(a->rmse_truth, std::sqrt(sq), 1e-12);
  EXPECT_EQ(a->n_like_min, lo);
  EXPECT_EQ(a->n_like_max, hi);
  EXPECT_EQ(a->n_ok + a->n_failed, a->repetitions);
  EXPECT_GE(a->log_z_sd, 0.0);
}

TEST(Experiments, FailedRunsCountedNotThrown) {
  const CaseSpec c = small_case(50.0, 2);
  const CaseStats s = run_case(c, 1);
  const ModeStats* standard = s.find(Mode::Standard);
  ASSERT_NE(standard, nullptr);
  EXPECT_EQ(standard->n_failed, 2);
  EXPECT_EQ(standard->n_ok, 0);
  EXPECT_TRUE(std::isnan(standard->log_z_mean));
  EXPECT_TRUE(std::isfinite(standard->as_terminated_mean));
  EXPECT_GT(std::abs(standard->as_terminated_mean - standard->oracle_mean), 100.0);
  const ModeStats* auto_pr = s.find(Mode::AutoPR);
  EXPECT_EQ(auto_pr->n_ok, 2);
}

TEST(Experiments, CacheSkipsFinishedRepetitions) {
  const CaseSpec c = small_case(5.0, 2);
  const fs::path dir = scratch_dir("cache");
  const CaseStats first = run_case(c, 1, directory_cache(dir));
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 4);

  std::atomic<int> computed = 0;
  RecordCache counting = directory_cache(dir);
  auto load = counting.load;
  counting.load = [&](const CaseSpec& spec, Mode mode, int rep) {
    auto r = load(spec, mode, rep);
    if (!r) ++computed;
    return r;
  };
  const CaseStats second = run_case(c, 1, counting);
  EXPECT_EQ(computed.load(), 0);
  for (std::size_t i = 0; i < first.records.size(); ++i) EXPECT_EQ(first.records[i].log_z, second.records[i].log_z);

  // A changed case no longer matches the stored records.
  CaseSpec changed = c;
  changed.sampler.n_live = 60;
  computed = 0;
  run_case(changed, 1, counting);
  EXPECT_EQ(computed.load(), 4);
  fs::remove_all(dir);
}

TEST(Experiments, InvalidCaseRejected) {
  CaseSpec c = small_case(5.0);
  c.repetitions = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_case(5.0);
  c.modes.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
