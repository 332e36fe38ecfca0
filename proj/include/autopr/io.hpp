#pragma once

// File outputs: run archives, datasets, prior curves, suite tables and the
// per-repetition record cache. Every file is written to a temporary name
// and renamed into place.

#include "autopr/experiments.hpp"
#include "autopr/models.hpp"
#include "autopr/priors.hpp"
#include "autopr/sampler.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace autopr {

using Json = nlohmann::ordered_json;

/// 17 significant digits; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double x);

void write_text_atomic(const std::filesystem::path& path, const std::string& content);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }
  void save(const std::filesystem::path& path) const { write_text_atomic(path, text_); }

 private:
  std::size_t columns_;
  std::string text_;
};

/// NaN and infinities become null.
Json json_number(double x);
/// null reads back as NaN.
double json_to_double(const Json& j);
Json json_vector(const Eigen::VectorXd& v);
Json json_matrix(const Eigen::MatrixXd& m);

Json to_json(const SamplerConfig& config);
Json to_json(const PriorSpec& prior);
Json to_json(const GaussianMeasurementModel& model);
Json to_json(const CaseSpec& spec);
Json to_json(const RepetitionRecord& record);
Json to_json(const ModeStats& stats);
Json to_json(const CaseStats& stats);
RepetitionRecord record_from_json(const Json& j);

/// dead_points.csv (iteration, log_like, log_weight, params...), the final
/// live points follow with iteration -1.
void write_dead_points(const std::filesystem::path& path, const RunResult& result,
                       const std::vector<std::string>& param_names);
void write_equal_weights(const std::filesystem::path& path, const Eigen::MatrixXd& samples,
                         const std::vector<std::string>& param_names);
/// Column names for a run's parameter vector: beta first in AutoPR mode.
std::vector<std::string> param_names(const InferenceProblem& problem);

/// CSV with columns m_1..m_K, one measurement per row, plus a JSON sidecar
/// holding the seed, theta* and the model.
void write_dataset(const std::filesystem::path& csv_path, const Dataset& data, const GaussianMeasurementModel& model);

void write_prior_evolution(const std::filesystem::path& path, const std::vector<PriorCurveRow>& rows);

/// Summary of one analysed run.
Json run_summary(const RunAnalysis& analysis, const InferenceProblem& problem);

/// Record cache rooted at `dir`. A stored record is reused only when the
/// case it was produced from is unchanged.
RecordCache directory_cache(const std::filesystem::path& dir);

/// Tables for a finished suite: table1.csv with fig4_rmse.csv and
/// fig4_nlike.csv for the univariate suite, table2.csv / table3.csv for the
/// bivariate suites, highdim_stats.csv for the high-dimensional suite.
void write_suite_tables(const std::filesystem::path& dir, Suite suite, const std::vector<CaseStats>& cases);
/// One row per (case, mode) with the aggregate statistics.
void write_case_table(const std::filesystem::path& path, const std::vector<CaseStats>& cases);
/// Every repetition of every case, one row each.
void write_repetitions(const std::filesystem::path& path, const std::vector<CaseStats>& cases);
/// Markdown tables laid out like the published ones.
std::string markdown_summary(Suite suite, const std::vector<CaseStats>& cases);

}  // namespace autopr
