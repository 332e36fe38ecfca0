#include "autopr/io.hpp"

#include "autopr/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace autopr {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = json_to_double(j[i]);
  return v;
}

double max_abs_or_nan(const Eigen::VectorXd& v) {
  double m = kNaN;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) continue;
    m = std::isnan(m) ? std::abs(v[i]) : std::max(m, std::abs(v[i]));
  }
  return m;
}

std::string cell(double x) { return format_double(x); }
std::string cell(long x) { return std::to_string(x); }
std::string cell(int x) { return std::to_string(x); }

std::vector<std::string> mode_stat_header(const std::string& prefix) {
  std::vector<std::string> names{"log_z_mean",      "log_z_sd",       "as_terminated_mean", "as_terminated_sd",
                                 "error_mean",      "error_sd",       "abs_error_median",   "log_z_error_mean",
                                 "rmse",            "rmse_posterior", "rmse_all",           "n_like_mean",
                                 "n_like_min",      "n_like_max",     "beta_minus_mean",    "beta_plus_mean",
                                 "beta_plus_sd",    "max_abs_corr",   "n_ok",               "failures"};
  if (!prefix.empty())
    for (auto& n : names) n = prefix + "_" + n;
  return names;
}

std::vector<std::string> mode_stat_cells(const ModeStats& m) {
  return {cell(m.log_z_mean),      cell(m.log_z_sd),        cell(m.as_terminated_mean), cell(m.as_terminated_sd),
          cell(m.error_mean),      cell(m.error_sd),        cell(m.abs_error_median),   cell(m.log_z_error_mean),
          cell(m.rmse_truth),      cell(m.rmse_posterior),  cell(m.rmse_truth_all),     cell(m.n_like_mean),
          cell(m.n_like_min),      cell(m.n_like_max),      cell(m.beta_minus_mean),    cell(m.beta_plus_mean),
          cell(m.beta_plus_sd),    cell(max_abs_or_nan(m.beta_theta_corr)), cell(m.n_ok), cell(m.n_failed)};
}

template <typename T>
void append(std::vector<T>& a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

double oracle_of(const CaseStats& c) { return c.modes.empty() ? kNaN : c.modes.front().oracle_mean; }

std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  if (header.empty()) throw std::invalid_argument("csv header must not be empty");
  row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("csv row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double json_to_double(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Json json_vector(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

Json json_matrix(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(json_vector(m.row(r).transpose()));
  return a;
}

Json to_json(const SamplerConfig& c) {
  return Json{{"n_live", c.n_live},
              {"efr", c.efr},
              {"tol", c.tol},
              {"max_iterations", c.max_iterations},
              {"max_draw_attempts", c.max_draw_attempts},
              {"max_outside_draws", c.max_outside_draws},
              {"seed", c.seed},
              {"ridge", c.ridge}};
}

Json to_json(const PriorSpec& prior) {
  Json j{{"kind", std::string(to_string(prior.kind()))}, {"mean", json_vector(prior.mean())}};
  switch (prior.kind()) {
    case PriorKind::TruncatedGaussianDiagonal:
      j["scale"] = json_vector(prior.scale());
      j["lower"] = json_vector(prior.lower());
      j["upper"] = json_vector(prior.upper());
      break;
    case PriorKind::GaussianFullCovariance:
      j["covariance"] = json_matrix(prior.covariance());
      j["beta_min"] = prior.beta_min();
      break;
    case PriorKind::UniformBox:
      j.erase("mean");
      j["lower"] = json_vector(prior.lower());
      j["upper"] = json_vector(prior.upper());
      break;
  }
  return j;
}

Json to_json(const GaussianMeasurementModel& model) {
  return Json{{"dimension", model.dimension},
              {"n_measurements", model.n_measurements},
              {"noise_mean", json_vector(model.noise_mean)},
              {"noise_cov", json_matrix(model.noise_cov)}};
}

Json to_json(const CaseSpec& spec) {
  Json modes = Json::array();
  for (Mode m : spec.modes) modes.push_back(std::string(to_string(m)));
  Json j{{"name", spec.name},
         {"model", to_json(spec.model)},
         {"prior", to_json(spec.prior)},
         {"theta_star", json_vector(spec.theta_star)},
         {"modes", modes},
         {"repetitions", spec.repetitions},
         {"base_seed", spec.base_seed},
         {"fixed_beta", spec.fixed_beta},
         {"beta_range", Json::array({spec.beta_lo.value_or(spec.prior.beta_min()), spec.beta_hi.value_or(1.0)})},
         {"sampler", to_json(spec.sampler)},
         {"beta_bounds", std::string(to_string(spec.bounds_method))}};
  j["sampler"].erase("seed");
  return j;
}

Json to_json(const RepetitionRecord& r) {
  return Json{{"case", r.case_name},
              {"mode", std::string(to_string(r.mode))},
              {"repetition", r.repetition},
              {"dataset_seed", r.dataset_seed},
              {"sampler_seed", r.sampler_seed},
              {"termination", std::string(to_string(r.termination))},
              {"degenerate_bounds", r.degenerate_bounds},
              {"oracle_log_z", json_number(r.oracle_log_z)},
              {"log_z", json_number(r.log_z)},
              {"log_z_uncorrected", json_number(r.log_z_uncorrected)},
              {"log_z_error", json_number(r.log_z_error)},
              {"beta_minus", json_number(r.beta_minus)},
              {"beta_plus", json_number(r.beta_plus)},
              {"n_like", r.n_like},
              {"n_iter", r.n_iter},
              {"n_outside", r.n_outside},
              {"ess", json_number(r.ess)},
              {"theta_hat", json_vector(r.theta_hat)},
              {"posterior_mean", json_vector(r.posterior_mean)},
              {"truncation_warning", r.truncation_warning},
              {"n_samples", r.n_samples},
              {"s_bb", json_number(r.s_bb)},
              {"s_bt", json_vector(r.s_bt)},
              {"s_tt", json_vector(r.s_tt)}};
}

RepetitionRecord record_from_json(const Json& j) {
  RepetitionRecord r;
  r.case_name = j.at("case").get<std::string>();
  r.mode = mode_from_string(j.at("mode").get<std::string>());
  r.repetition = j.at("repetition").get<int>();
  r.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  r.sampler_seed = j.at("sampler_seed").get<std::uint64_t>();
  const auto term = j.at("termination").get<std::string>();
  if (term == "converged") r.termination = Termination::Converged;
  else if (term == "plateau") r.termination = Termination::Plateau;
  else if (term == "stalled") r.termination = Termination::Stalled;
  else if (term == "max-iterations") r.termination = Termination::MaxIterations;
  else throw std::invalid_argument("unknown termination '" + term + "'");
  r.degenerate_bounds = j.at("degenerate_bounds").get<bool>();
  r.oracle_log_z = json_to_double(j.at("oracle_log_z"));
  r.log_z = json_to_double(j.at("log_z"));
  r.log_z_uncorrected = json_to_double(j.at("log_z_uncorrected"));
  r.log_z_error = json_to_double(j.at("log_z_error"));
  r.beta_minus = json_to_double(j.at("beta_minus"));
  r.beta_plus = json_to_double(j.at("beta_plus"));
  r.n_like = j.at("n_like").get<long>();
  r.n_iter = j.at("n_iter").get<long>();
  r.n_outside = j.at("n_outside").get<long>();
  r.ess = json_to_double(j.at("ess"));
  r.theta_hat = vector_from_json(j.at("theta_hat"));
  r.posterior_mean = vector_from_json(j.at("posterior_mean"));
  r.truncation_warning = j.at("truncation_warning").get<bool>();
  r.n_samples = j.at("n_samples").get<long>();
  r.s_bb = json_to_double(j.at("s_bb"));
  r.s_bt = vector_from_json(j.at("s_bt"));
  r.s_tt = vector_from_json(j.at("s_tt"));
  return r;
}

Json to_json(const ModeStats& m) {
  return Json{{"mode", std::string(to_string(m.mode))},
              {"repetitions", m.repetitions},
              {"n_ok", m.n_ok},
              {"n_failed", m.n_failed},
              {"log_z_mean", json_number(m.log_z_mean)},
              {"log_z_sd", json_number(m.log_z_sd)},
              {"as_terminated_mean", json_number(m.as_terminated_mean)},
              {"as_terminated_sd", json_number(m.as_terminated_sd)},
              {"oracle_mean", json_number(m.oracle_mean)},
              {"error_mean", json_number(m.error_mean)},
              {"error_sd", json_number(m.error_sd)},
              {"abs_error_median", json_number(m.abs_error_median)},
              {"log_z_error_mean", json_number(m.log_z_error_mean)},
              {"rmse", json_number(m.rmse_truth)},
              {"rmse_posterior", json_number(m.rmse_posterior)},
              {"rmse_all", json_number(m.rmse_truth_all)},
              {"n_like_mean", json_number(m.n_like_mean)},
              {"n_like_min", m.n_like_min},
              {"n_like_max", m.n_like_max},
              {"beta_minus_mean", json_number(m.beta_minus_mean)},
              {"beta_plus_mean", json_number(m.beta_plus_mean)},
              {"beta_plus_sd", json_number(m.beta_plus_sd)},
              {"beta_theta_corr", json_vector(m.beta_theta_corr)}};
}

Json to_json(const CaseStats& c) {
  Json modes = Json::array();
  for (const auto& m : c.modes) modes.push_back(to_json(m));
  return Json{{"name", c.name}, {"theta_star", json_vector(c.theta_star)}, {"modes", modes}};
}

std::vector<std::string> param_names(const InferenceProblem& problem) {
  std::vector<std::string> names;
  if (problem.mode == Mode::AutoPR) names.emplace_back("beta");
  for (Eigen::Index k = 0; k < problem.physical_dimension(); ++k) names.push_back("theta_" + std::to_string(k + 1));
  return names;
}

void write_dead_points(const fs::path& path, const RunResult& result, const std::vector<std::string>& names) {
  std::vector<std::string> header{"iteration", "log_like", "log_weight"};
  append(header, names);
  CsvWriter csv(header);
  auto emit = [&](long it, double ll, double lw, const Eigen::VectorXd& p) {
    std::vector<std::string> cells{cell(it), cell(ll), cell(lw)};
    for (Eigen::Index k = 0; k < p.size(); ++k) cells.push_back(cell(p[k]));
    csv.row(cells);
  };
  for (const auto& d : result.dead) emit(d.iteration, d.log_like, d.log_weight, d.params);
  for (const auto& p : result.final_live) emit(-1, p.log_like, result.final_live_log_weight, p.params);
  csv.save(path);
}

void write_equal_weights(const fs::path& path, const Eigen::MatrixXd& samples, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != samples.rows())
    throw std::invalid_argument("parameter names do not match the sample rows");
  CsvWriter csv(names);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    std::vector<std::string> cells;
    for (Eigen::Index k = 0; k < samples.rows(); ++k) cells.push_back(cell(samples(k, j)));
    csv.row(cells);
  }
  csv.save(path);
}

void write_dataset(const fs::path& csv_path, const Dataset& data, const GaussianMeasurementModel& model) {
  std::vector<std::string> header;
  for (Eigen::Index k = 0; k < data.measurements.cols(); ++k) header.push_back("m_" + std::to_string(k + 1));
  CsvWriter csv(header);
  for (Eigen::Index n = 0; n < data.measurements.rows(); ++n) {
    std::vector<std::string> cells;
    for (Eigen::Index k = 0; k < data.measurements.cols(); ++k) cells.push_back(cell(data.measurements(n, k)));
    csv.row(cells);
  }
  csv.save(csv_path);
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  const Json j{{"seed", data.seed}, {"theta_star", json_vector(data.theta_star)}, {"model", to_json(model)}};
  write_text_atomic(sidecar, j.dump(2) + "\n");
}

void write_prior_evolution(const fs::path& path, const std::vector<PriorCurveRow>& rows) {
  CsvWriter csv({"beta", "theta", "density"});
  for (const auto& r : rows) csv.row({cell(r.beta), cell(r.theta), cell(r.density)});
  csv.save(path);
}

Json run_summary(const RunAnalysis& a, const InferenceProblem& problem) {
  const RunResult& r = a.result;
  Json j{{"mode", std::string(to_string(problem.mode))},
         {"termination", std::string(to_string(r.termination))},
         {"log_z_raw", json_number(a.log_z_raw)},
         {"log_z", json_number(a.log_z)},
         {"log_z_error", json_number(r.log_z_error)},
         {"n_like", r.n_like},
         {"n_iter", r.n_iter},
         {"n_outside", r.n_outside},
         {"ess", json_number(a.ess)},
         {"n_equal_weight", a.equal_weight.cols()},
         {"theta_hat", json_vector(a.theta_hat)}};
  if (problem.mode == Mode::AutoPR) {
    j["beta_minus"] = json_number(a.bounds ? a.bounds->beta_minus : kNaN);
    j["beta_plus"] = json_number(a.bounds ? a.bounds->beta_plus : kNaN);
    j["beta_bounds_method"] = a.bounds ? std::string(to_string(a.bounds->method)) : "";
    j["beta_range"] = Json::array({problem.beta_lo, problem.beta_hi});
    j["degenerate_bounds"] = a.degenerate_bounds;
  } else {
    j["beta_minus"] = nullptr;
    j["beta_plus"] = nullptr;
  }
  if (problem.mode == Mode::FixedBeta) j["fixed_beta"] = problem.fixed_beta;
  return j;
}

RecordCache directory_cache(const fs::path& dir) {
  RecordCache cache;
  auto file_for = [dir](const std::string& name, Mode mode, int rep) {
    return dir / (name + "__" + std::string(to_string(mode)) + "__" + std::to_string(rep) + ".json");
  };
  cache.load = [file_for](const CaseSpec& spec, Mode mode, int rep) -> std::optional<RepetitionRecord> {
    const fs::path path = file_for(spec.name, mode, rep);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
      const Json j = Json::parse(in);
      if (j.at("case_spec") != to_json(spec)) return std::nullopt;
      return record_from_json(j.at("record"));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  cache.store = [file_for](const CaseSpec& spec, const RepetitionRecord& record) {
    const Json j{{"case_spec", to_json(spec)}, {"record", to_json(record)}};
    write_text_atomic(file_for(spec.name, record.mode, record.repetition), j.dump() + "\n");
  };
  return cache;
}

void write_suite_tables(const fs::path& dir, Suite suite, const std::vector<CaseStats>& cases) {
  switch (suite) {
    case Suite::Univariate: {
      std::vector<std::string> header{"theta_star", "oracle_mean"};
      append(header, mode_stat_header("autopr"));
      append(header, mode_stat_header("standard"));
      CsvWriter table(header);
      CsvWriter rmse({"theta_star", "standard_rmse_all", "autopr_rmse_all", "standard_rmse", "autopr_rmse",
                      "standard_rmse_posterior", "autopr_rmse_posterior", "standard_failures", "autopr_failures"});
      CsvWriter nlike({"theta_star", "standard_n_like_mean", "standard_n_like_min", "standard_n_like_max",
                       "autopr_n_like_mean", "autopr_n_like_min", "autopr_n_like_max"});
      for (const auto& c : cases) {
        const ModeStats* a = c.find(Mode::AutoPR);
        const ModeStats* s = c.find(Mode::Standard);
        if (!a || !s) throw std::invalid_argument("univariate tables need standard and autopr results");
        std::vector<std::string> row{cell(c.theta_star[0]), cell(oracle_of(c))};
        append(row, mode_stat_cells(*a));
        append(row, mode_stat_cells(*s));
        table.row(row);
        rmse.row({cell(c.theta_star[0]), cell(s->rmse_truth_all), cell(a->rmse_truth_all), cell(s->rmse_truth),
                  cell(a->rmse_truth), cell(s->rmse_posterior), cell(a->rmse_posterior), cell(s->n_failed),
                  cell(a->n_failed)});
        nlike.row({cell(c.theta_star[0]), cell(s->n_like_mean), cell(s->n_like_min), cell(s->n_like_max),
                   cell(a->n_like_mean), cell(a->n_like_min), cell(a->n_like_max)});
      }
      table.save(dir / "table1.csv");
      rmse.save(dir / "fig4_rmse.csv");
      nlike.save(dir / "fig4_nlike.csv");
      return;
    }
    case Suite::BivariateUncorrelated:
    case Suite::BivariateCorrelated:
    case Suite::HighDim: {
      std::vector<std::string> header{"case", "dimension", "oracle_mean"};
      append(header, mode_stat_header("autopr"));
      CsvWriter table(header);
      for (const auto& c : cases) {
        const ModeStats* a = c.find(Mode::AutoPR);
        if (!a) throw std::invalid_argument("suite tables need autopr results");
        std::vector<std::string> row{c.name, cell(static_cast<long>(c.theta_star.size())), cell(oracle_of(c))};
        append(row, mode_stat_cells(*a));
        table.row(row);
      }
      const char* name = suite == Suite::BivariateUncorrelated ? "table2.csv"
                         : suite == Suite::BivariateCorrelated ? "table3.csv"
                                                               : "highdim_stats.csv";
      table.save(dir / name);
      return;
    }
  }
}

void write_case_table(const fs::path& path, const std::vector<CaseStats>& cases) {
  std::vector<std::string> header{"case", "mode", "dimension", "oracle_mean"};
  append(header, mode_stat_header(""));
  CsvWriter csv(header);
  for (const auto& c : cases) {
    for (const auto& m : c.modes) {
      std::vector<std::string> row{c.name, std::string(to_string(m.mode)), cell(static_cast<long>(c.theta_star.size())),
                                   cell(m.oracle_mean)};
      append(row, mode_stat_cells(m));
      csv.row(row);
    }
  }
  csv.save(path);
}

void write_repetitions(const fs::path& path, const std::vector<CaseStats>& cases) {
  std::size_t kmax = 0;
  for (const auto& c : cases) kmax = std::max(kmax, static_cast<std::size_t>(c.theta_star.size()));
  std::vector<std::string> header{"case",        "mode",       "repetition",  "dataset_seed", "sampler_seed",
                                  "termination", "ok",         "oracle_log_z", "log_z",       "log_z_uncorrected",
                                  "log_z_error", "beta_minus", "beta_plus",   "n_like",       "n_iter",
                                  "n_outside",   "ess"};
  for (std::size_t k = 0; k < kmax; ++k) header.push_back("theta_hat_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < kmax; ++k) header.push_back("posterior_mean_" + std::to_string(k + 1));
  CsvWriter csv(header);
  for (const auto& c : cases) {
    for (const auto& r : c.records) {
      std::vector<std::string> row{r.case_name,
                                   std::string(to_string(r.mode)),
                                   cell(r.repetition),
                                   std::to_string(r.dataset_seed),
                                   std::to_string(r.sampler_seed),
                                   std::string(to_string(r.termination)),
                                   r.ok() ? "1" : "0",
                                   cell(r.oracle_log_z),
                                   cell(r.log_z),
                                   cell(r.log_z_uncorrected),
                                   cell(r.log_z_error),
                                   cell(r.beta_minus),
                                   cell(r.beta_plus),
                                   cell(r.n_like),
                                   cell(r.n_iter),
                                   cell(r.n_outside),
                                   cell(r.ess)};
      for (std::size_t k = 0; k < kmax; ++k)
        row.push_back(k < static_cast<std::size_t>(r.theta_hat.size()) ? cell(r.theta_hat[static_cast<Eigen::Index>(k)]) : "");
      for (std::size_t k = 0; k < kmax; ++k)
        row.push_back(k < static_cast<std::size_t>(r.posterior_mean.size())
                          ? cell(r.posterior_mean[static_cast<Eigen::Index>(k)])
                          : "");
      csv.row(row);
    }
  }
  csv.save(path);
}

std::string markdown_summary(Suite suite, const std::vector<CaseStats>& cases) {
  std::ostringstream md;
  md << "## " << to_string(suite) << "\n\n";
  if (suite == Suite::Univariate) {
    md << "| theta* | Oracle | autoPR mean | SNS mean | autoPR s.d. | SNS s.d. | SNS as-terminated mean | "
          "SNS failures | autoPR failures | autoPR beta+ |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : cases) {
      const ModeStats* a = c.find(Mode::AutoPR);
      const ModeStats* s = c.find(Mode::Standard);
      if (!a || !s) continue;
      md << "| " << fixed(c.theta_star[0], 0) << " | " << fixed(oracle_of(c), 4) << " | " << fixed(a->log_z_mean, 4)
         << " | " << fixed(s->log_z_mean, 4) << " | " << fixed(a->log_z_sd, 4) << " | " << fixed(s->log_z_sd, 4)
         << " | " << fixed(s->as_terminated_mean, 4) << " | " << s->n_failed << "/" << s->repetitions << " | "
         << a->n_failed << "/" << a->repetitions << " | " << fixed(a->beta_plus_mean, 3) << " |\n";
    }
  } else {
    md << "| Case | Oracle | autoPR mean | autoPR s.d. | error mean | error s.d. | RMSE vs posterior | beta+ | n_like | "
          "failures |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : cases) {
      const ModeStats* a = c.find(Mode::AutoPR);
      if (!a) continue;
      md << "| " << c.name << " | " << fixed(oracle_of(c), 4) << " | " << fixed(a->log_z_mean, 4) << " | "
         << fixed(a->log_z_sd, 4) << " | " << fixed(a->error_mean, 4) << " | " << fixed(a->error_sd, 4) << " | "
         << fixed(a->rmse_posterior, 4) << " | " << fixed(a->beta_plus_mean, 4) << " | " << fixed(a->n_like_mean, 0)
         << " | " << a->n_failed << "/" << a->repetitions << " |\n";
    }
  }
  md << "\n";
  return md.str();
}

}  // namespace autopr
