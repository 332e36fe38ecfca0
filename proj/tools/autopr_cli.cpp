// autopr: nested sampling with automatic posterior repartitioning.
//
//   autopr run <config.json>          one run, archive + summary.json
//   autopr sweep <config.json>        repeated cases from a config
//   autopr replicate <suite>          univariate | bivariate | highdim
//   autopr prior-curve                powered-prior densities for plotting
//
// Exit status: 0 success, 1 configuration error, 2 sampler stall.

#include "autopr/config.hpp"
#include "autopr/errors.hpp"
#include "autopr/experiments.hpp"
#include "autopr/io.hpp"
#include "autopr/models.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace autopr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStall = 2;

struct Overrides {
  std::optional<std::string> seed;
  std::optional<int> n_live;
  std::optional<double> efr;
  std::optional<double> tol;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> beta_bounds;
  std::optional<int> repetitions;

  Json echo() const {
    Json j = Json::object();
    if (seed) j["seed"] = *seed;
    if (n_live) j["nlive"] = *n_live;
    if (efr) j["efr"] = *efr;
    if (tol) j["tol"] = *tol;
    if (mode) j["mode"] = *mode;
    if (out) j["out"] = *out;
    if (workers) j["workers"] = *workers;
    if (beta_bounds) j["beta_bounds"] = *beta_bounds;
    if (repetitions) j["repetitions"] = *repetitions;
    return j;
  }
};

void add_common_flags(CLI::App* cmd, Overrides& o, bool with_workers, bool with_mode) {
  cmd->add_option("--seed", o.seed, "Seed (integer, or 'random')");
  cmd->add_option("--nlive", o.n_live, "Number of live points");
  cmd->add_option("--efr", o.efr, "Sampling efficiency; the ellipsoid volume is enlarged by 1/efr");
  cmd->add_option("--tol", o.tol, "Evidence tolerance for the stopping rule");
  if (with_mode) cmd->add_option("--mode", o.mode, "standard | fixed-beta | autopr");
  cmd->add_option("--out", o.out, "Output directory");
  if (with_workers) cmd->add_option("--workers", o.workers, "Concurrent repetitions");
  cmd->add_option("--beta-bounds", o.beta_bounds, "extrema | percentile");
}

std::uint64_t resolve_seed(const std::string& s) {
  if (s == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("--seed", "expected a non-negative integer or 'random', got '" + s + "'");
  }
}

void apply_sampler(SamplerConfig& c, const Overrides& o) {
  if (o.n_live) c.n_live = *o.n_live;
  if (o.efr) c.efr = *o.efr;
  if (o.tol) c.tol = *o.tol;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("sampler", e.what());
  }
}

BetaBoundsMethod parse_bounds_flag(const std::string& s) {
  try {
    return beta_bounds_method_from_string(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--beta-bounds", e.what());
  }
}

Mode parse_mode_flag(const std::string& s) {
  try {
    return mode_from_string(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--mode", e.what());
  }
}

int cmd_run(const std::string& config_path, const Overrides& o) {
  RunConfig cfg = parse_run_config(read_json_file(config_path));
  if (o.seed) cfg.sampler.seed = resolve_seed(*o.seed);
  apply_sampler(cfg.sampler, o);
  if (o.mode) cfg.mode = parse_mode_flag(*o.mode);
  if (o.out) cfg.output = *o.out;
  if (o.beta_bounds) cfg.analysis.bounds_method = parse_bounds_flag(*o.beta_bounds);

  const Dataset data = simulate_dataset(cfg.model, cfg.theta_star, cfg.data_seed);
  InferenceProblem problem = [&] {
    try {
      InferenceProblem p = cfg.problem(make_log_likelihood(cfg.model, data));
      p.validate();
      return p;
    } catch (const std::exception& e) {
      throw ConfigError("mode", e.what());
    }
  }();

  AnalysisOptions analysis = cfg.analysis;
  analysis.resample_seed = cfg.sampler.seed + 1;
  const RunAnalysis a = run_and_analyse(problem, cfg.sampler, analysis);

  const fs::path out = cfg.output;
  fs::create_directories(out);
  const auto names = param_names(problem);
  if (cfg.emit.dead_points) write_dead_points(out / "dead_points.csv", a.result, names);
  if (cfg.emit.equal_weights) write_equal_weights(out / "posterior_equal_weights.csv", a.equal_weight, names);
  if (cfg.emit.dataset) write_dataset(out / "dataset.csv", data, cfg.model);

  Json summary = run_summary(a, problem);
  try {
    summary["oracle_log_z"] = json_number(oracle_log_evidence(cfg.model, data, cfg.prior));
  } catch (const UnsupportedConfiguration&) {
    summary["oracle_log_z"] = nullptr;
  }
  summary["config"] = to_json(cfg);
  summary["overrides"] = o.echo();
  write_text_atomic(out / "summary.json", summary.dump(2) + "\n");

  std::cout << "termination: " << to_string(a.result.termination) << "\n"
            << "log Z: " << format_double(a.log_z) << " +- " << format_double(a.result.log_z_error) << "\n"
            << "n_like: " << a.result.n_like << "\n";
  if (a.bounds)
    std::cout << "beta bounds: [" << format_double(a.bounds->beta_minus) << ", "
              << format_double(a.bounds->beta_plus) << "]\n";
  std::cout << "outputs: " << out.string() << "\n";
  if (a.result.termination == Termination::Plateau)
    std::cerr << "warning: every live point has the same log-likelihood; the run stopped on a plateau\n";
  const bool stalled =
      a.result.termination == Termination::Stalled || a.result.termination == Termination::MaxIterations;
  return stalled ? kExitStall : kExitOk;
}

struct SuiteGroup {
  Suite suite;
  std::vector<CaseStats> cases;
};

std::vector<CaseStats> run_cases(const std::vector<CaseSpec>& specs, int workers, const fs::path& records) {
  const RecordCache cache = directory_cache(records);
  std::vector<CaseStats> out;
  for (const auto& spec : specs) {
    std::cerr << "case " << spec.name << " (" << spec.repetitions << " repetitions)\n";
    out.push_back(run_case(spec, workers, cache));
  }
  return out;
}

Json groups_json(const std::vector<SuiteGroup>& groups) {
  Json arr = Json::array();
  for (const auto& g : groups) {
    Json cases = Json::array();
    for (const auto& c : g.cases) cases.push_back(to_json(c));
    arr.push_back(Json{{"suite", std::string(to_string(g.suite))}, {"cases", cases}});
  }
  return arr;
}

int cmd_replicate(const std::string& name, const Overrides& o, std::optional<int> repetitions) {
  std::vector<Suite> suites;
  if (name == "univariate") suites = {Suite::Univariate};
  else if (name == "bivariate") suites = {Suite::BivariateUncorrelated, Suite::BivariateCorrelated};
  else if (name == "bivariate-uncorrelated") suites = {Suite::BivariateUncorrelated};
  else if (name == "bivariate-correlated") suites = {Suite::BivariateCorrelated};
  else if (name == "highdim") suites = {Suite::HighDim};
  else throw ConfigError("suite", "unknown suite '" + name + "' (univariate, bivariate, highdim)");
  if (o.mode) throw ConfigError("--mode", "replicate runs the modes fixed by the suite");

  SuiteOptions options;
  if (o.seed) options.base_seed = resolve_seed(*o.seed);
  apply_sampler(options.sampler, o);
  if (o.beta_bounds) options.bounds_method = parse_bounds_flag(*o.beta_bounds);
  if (repetitions) {
    if (*repetitions < 1) throw ConfigError("--repetitions", "must be at least 1");
    options.repetitions = *repetitions;
  }
  const int workers = o.workers.value_or(1);
  if (workers < 1) throw ConfigError("--workers", "must be at least 1");
  const fs::path out = o.out.value_or("replicate_" + name);

  std::vector<SuiteGroup> groups;
  std::string markdown;
  for (Suite s : suites) {
    SuiteGroup g{s, run_cases(suite_cases(s, options), workers, out / "records")};
    write_suite_tables(out, s, g.cases);
    markdown += markdown_summary(s, g.cases);
    groups.push_back(std::move(g));
  }
  std::vector<CaseStats> all;
  for (const auto& g : groups) all.insert(all.end(), g.cases.begin(), g.cases.end());
  write_repetitions(out / "repetitions.csv", all);

  Json options_json{{"repetitions", options.repetitions},
                    {"base_seed", options.base_seed},
                    {"sampler", to_json(options.sampler)},
                    {"beta_bounds", std::string(to_string(options.bounds_method))},
                    {"workers", workers}};
  options_json["sampler"].erase("seed");
  const Json summary{{"suite", name}, {"options", options_json}, {"overrides", o.echo()}, {"groups", groups_json(groups)}};
  write_text_atomic(out / "suite_summary.json", summary.dump(2) + "\n");
  write_text_atomic(out / "summary.md", markdown);
  std::cout << markdown << "outputs: " << out.string() << "\n";
  return kExitOk;
}

std::string cell(double x, int digits) {
  if (!std::isfinite(x)) return format_double(x);
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

int cmd_sweep(const std::string& config_path, const Overrides& o) {
  SweepConfig cfg = parse_sweep_config(read_json_file(config_path));
  std::optional<std::uint64_t> seed;
  if (o.seed) seed = resolve_seed(*o.seed);
  for (auto& c : cfg.cases) {
    if (seed) c.base_seed = *seed;
    apply_sampler(c.sampler, o);
    if (o.mode) c.modes = {parse_mode_flag(*o.mode)};
    if (o.beta_bounds) c.bounds_method = parse_bounds_flag(*o.beta_bounds);
  }
  if (o.workers) {
    if (*o.workers < 1) throw ConfigError("--workers", "must be at least 1");
    cfg.workers = *o.workers;
  }
  if (o.out) cfg.output = *o.out;
  const fs::path out = cfg.output;

  const std::vector<CaseStats> stats = run_cases(cfg.cases, cfg.workers, out / "records");
  write_case_table(out / "sweep_stats.csv", stats);
  write_repetitions(out / "repetitions.csv", stats);

  Json cases = Json::array();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    Json c = to_json(stats[i]);
    c["spec"] = to_json(cfg.cases[i]);
    cases.push_back(c);
  }
  const Json summary{{"workers", cfg.workers}, {"overrides", o.echo()}, {"cases", cases}};
  write_text_atomic(out / "suite_summary.json", summary.dump(2) + "\n");

  std::ostringstream md;
  md << "# sweep\n\n| Case | Mode | Oracle | log Z mean | log Z s.d. | error mean | RMSE | n_like | failures |\n"
     << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : stats)
    for (const auto& m : c.modes)
      md << "| " << c.name << " | " << to_string(m.mode) << " | " << cell(m.oracle_mean, 4) << " | "
         << cell(m.log_z_mean, 4) << " | " << cell(m.log_z_sd, 4) << " | " << cell(m.error_mean, 4) << " | "
         << cell(m.rmse_truth, 4) << " | " << cell(m.n_like_mean, 0) << " | " << m.n_failed << "/" << m.repetitions
         << " |\n";
  write_text_atomic(out / "summary.md", md.str());
  std::cout << md.str() << "outputs: " << out.string() << "\n";
  return kExitOk;
}

int cmd_prior_curve(const std::optional<std::string>& config_path, const std::vector<double>& betas, int points,
                    const std::optional<std::string>& out) {
  PriorSpec prior = PriorSpec::truncated_gaussian(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 4.0));
  if (config_path) prior = parse_prior(read_json_file(*config_path), "prior");
  if (prior.dimension() != 1) throw ConfigError("prior", "prior-curve needs a one-dimensional prior");
  if (points < 1) throw ConfigError("--points", "need at least one grid point");
  if (!prior.bounded()) throw ConfigError("prior", "prior-curve needs a bounded prior");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(points, prior.lower()[0], prior.upper()[0]);
  std::vector<PriorCurveRow> rows;
  try {
    rows = emit_prior_evolution(prior, betas, grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--betas", e.what());
  }
  const fs::path path = out.value_or("prior_evolution.csv");
  write_prior_evolution(path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested sampling with automatic posterior repartitioning"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, rep_o;
  std::string run_config, sweep_config, suite;
  std::optional<int> repetitions;

  auto* run = app.add_subcommand("run", "Run nested sampling once from a JSON config");
  run->add_option("config", run_config, "Run configuration (JSON)")->required();
  add_common_flags(run, run_o, false, true);

  auto* sweep = app.add_subcommand("sweep", "Run every case of a sweep config over repeated datasets");
  sweep->add_option("config", sweep_config, "Sweep configuration (JSON)")->required();
  add_common_flags(sweep, sweep_o, true, true);

  auto* rep = app.add_subcommand("replicate", "Reproduce a benchmark suite: univariate, bivariate or highdim");
  rep->add_option("suite", suite, "Suite name")->required();
  rep->add_option("--repetitions", repetitions, "Repetitions per case (default 10)");
  add_common_flags(rep, rep_o, true, false);

  std::optional<std::string> curve_config, curve_out;
  std::vector<double> betas{1.0, 0.5, 0.25, 0.01, 0.0};
  int points = 1001;
  auto* curve = app.add_subcommand("prior-curve", "Write powered-prior densities pi^beta / Z(beta) on a grid");
  curve->add_option("--prior", curve_config, "Prior JSON (default: N(0, 4^2) truncated to [-50, 50])");
  curve->add_option("--betas", betas, "Beta values")->delimiter(',');
  curve->add_option("--points", points, "Grid points across the support");
  curve->add_option("--out", curve_out, "Output CSV (default prior_evolution.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_config, run_o);
    if (*sweep) return cmd_sweep(sweep_config, sweep_o);
    if (*rep) {
      rep_o.repetitions = repetitions;
      return cmd_replicate(suite, rep_o, repetitions);
    }
    if (*curve) return cmd_prior_curve(curve_config, betas, points, curve_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedConfiguration& e) {
    std::cerr << "unsupported configuration: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
