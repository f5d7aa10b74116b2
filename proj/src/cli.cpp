#include "dpm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "dpm/config.hpp"
#include "dpm/evaluation.hpp"
#include "dpm/io.hpp"
#include "dpm/parallel.hpp"
#include "dpm/study.hpp"

namespace dpm {

namespace {

// Raised for problems the user can fix by changing the command line.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json metrics_json(const ForecastReport& r) {
  auto optional_number = [](const std::optional<double>& v) {
    return v ? json_number(*v) : nlohmann::json(nullptr);
  };
  return {{"mean", json_number(r.mean)},
          {"std_dev", json_number(r.std_dev)},
          {"rmse", json_number(r.f_rmse)},
          {"mae", json_number(r.f_mae)},
          {"corr", optional_number(r.f_corr)},
          {"r2", optional_number(r.f_r2)}};
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string{};
}

struct Inputs {
  RunConfig config;
  // simulate / sweep-assets
  Eigen::Index assets = 6;
  Eigen::Index periods = 120;
  // select-alpha
  std::vector<double> alphas{100.0, 400.0, 1600.0, 6400.0, 25600.0};
  // replicate
  FeeSchedule fees;
  // intraperiod
  std::filesystem::path partial;
  double ewma_decay = kDefaultEwmaDecay;
  // sweep-assets
  std::vector<Eigen::Index> asset_counts{4, 8, 12, 16};
  Eigen::Index replications = 30;
};

class Command {
 public:
  Command(Inputs inputs, std::ostream& out) : in_(std::move(inputs)), out_(out) {}

  void simulate();
  void estimate();
  void compare();
  void select_alpha();
  void replicate();
  void intraperiod();
  void sweep();

 private:
  const RunConfig& cfg() const { return in_.config; }
  std::filesystem::path path(const std::string& name) const {
    return cfg().output_dir / name;
  }
  void emit(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    out_ << "wrote " << path(name).string() << '\n';
  }
  ReturnPanel load_input() {
    if (cfg().input.empty()) throw UsageError("--input is required for this command");
    digest_ = file_digest(cfg().input);
    return load_panel_csv(cfg().input, cfg().fund_column);
  }
  nlohmann::json metadata(const std::string& command) const {
    return run_metadata(cfg(), command, digest_);
  }

  Inputs in_;
  std::ostream& out_;
  std::string digest_;
};

void Command::simulate() {
  if (in_.assets < 1 || in_.periods < 1) throw UsageError("--n and --t must be >= 1");
  Rng rng = Rng::substream(cfg().seed, {0x51ULL});
  const SimulatedPanel sim =
      simulate_panel(in_.assets, in_.periods, cfg().settings.params, rng);
  emit("panel.csv", panel_csv(sim.panel));
  DatedTable truth{sim.panel.dates, sim.panel.asset_names, sim.weights};
  emit("truth_weights.csv", dated_csv(truth));
  nlohmann::json doc = metadata("simulate");
  doc["assets"] = in_.assets;
  doc["periods"] = in_.periods;
  doc["panel_digest_fnv1a"] = fnv1a_hex(panel_csv(sim.panel));
  emit("simulate.json", dump_json(doc));
}

void Command::estimate() {
  const ReturnPanel panel = load_input();
  const WeightTrajectory traj = run_method(cfg().method, panel, cfg().resolved());
  const std::string name = method_name(cfg().method);
  emit("trajectory_" + name + ".csv", trajectory_csv(traj));
  nlohmann::json doc = metadata("estimate");
  doc["periods"] = traj.periods();
  doc["first_period"] = traj.first_period;
  doc["forecast"] = metrics_json(forecast_metrics(traj.actual_return, traj.forecast_return));
  doc["fitted"] = metrics_json(forecast_metrics(traj.actual_return, traj.fitted_return));
  doc["log_marginal_likelihood"] = json_number(traj.log_marginal_likelihood);
  emit("estimate_" + name + ".json", dump_json(doc));
}

void Command::compare() {
  const ReturnPanel panel = load_input();
  EstimatorSettings settings = cfg().resolved();
  const unsigned workers = settings.dpm.workers;
  if (workers > 1) settings.dpm.workers = 1;
  const Eigen::Index first = settings.window.k;
  if (first >= panel.periods()) {
    throw UsageError("compare: the panel must be longer than the rolling window");
  }
  std::vector<MethodScore> scores(kAllMethods.size());
  parallel_for(static_cast<std::ptrdiff_t>(kAllMethods.size()), workers,
               [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
                 for (std::ptrdiff_t m = begin; m < end; ++m) {
                   const Method method = kAllMethods[static_cast<std::size_t>(m)];
                   const WeightTrajectory traj = run_method(method, panel, settings);
                   scores[static_cast<std::size_t>(m)] =
                       score_trajectory(method, traj, panel, first);
                 }
               });

  const Eigen::VectorXd fund = panel.fund.segment(first, panel.periods() - first);
  const double fund_mean = fund.mean();
  const double fund_sd = std::sqrt((fund.array() - fund_mean).square().sum() /
                                   static_cast<double>(fund.size() - 1));
  std::ostringstream csv;
  csv << "block,statistic,fund";
  for (Method m : kAllMethods) csv << ',' << method_name(m);
  csv << '\n';
  nlohmann::json blocks = nlohmann::json::object();
  for (const bool forecasted : {false, true}) {
    const std::string block = forecasted ? "forecasted" : "non-forecasted";
    auto report = [&](const MethodScore& s) -> const ForecastReport& {
      return forecasted ? s.forecast : s.fitted;
    };
    struct Row {
      const char* label;
      std::string fund;
      std::function<std::string(const ForecastReport&)> cell;
    };
    const std::vector<Row> rows = {
        {"Mean", format_number(fund_mean), [](const ForecastReport& r) { return format_number(r.mean); }},
        {"Standard Deviation", format_number(fund_sd),
         [](const ForecastReport& r) { return format_number(r.std_dev); }},
        {"RMSE", "", [](const ForecastReport& r) { return format_number(r.f_rmse); }},
        {"Mean Abs Error", "", [](const ForecastReport& r) { return format_number(r.f_mae); }},
        {"Correlation", "", [](const ForecastReport& r) { return optional_cell(r.f_corr); }},
        {"R2", "", [](const ForecastReport& r) { return optional_cell(r.f_r2); }},
    };
    for (const Row& row : rows) {
      csv << block << ',' << row.label << ',' << row.fund;
      for (const MethodScore& s : scores) csv << ',' << row.cell(report(s));
      csv << '\n';
    }
    nlohmann::json methods = nlohmann::json::object();
    for (const MethodScore& s : scores) methods[method_name(s.method)] = metrics_json(report(s));
    blocks[block] = methods;
  }
  emit("compare.csv", csv.str());
  nlohmann::json doc = metadata("compare");
  doc["scored_periods"] = {{"first", panel.dates[static_cast<std::size_t>(first)]},
                           {"last", panel.dates.back()},
                           {"count", fund.size()}};
  doc["fund"] = {{"mean", json_number(fund_mean)}, {"std_dev", json_number(fund_sd)}};
  doc["blocks"] = blocks;
  emit("compare.json", dump_json(doc));
}

void Command::select_alpha() {
  const ReturnPanel panel = load_input();
  const EstimatorSettings s = cfg().resolved();
  const AlphaSelection sel = dpm::select_alpha(panel, in_.alphas, s.params, s.dpm);
  std::ostringstream csv;
  csv << "alpha,log_marginal_likelihood\n";
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < sel.alphas.size(); ++i) {
    csv << format_number(sel.alphas[i]) << ',' << format_number(sel.log_marginal_likelihoods[i])
        << '\n';
    curve.push_back({{"alpha", json_number(sel.alphas[i])},
                     {"log_marginal_likelihood", json_number(sel.log_marginal_likelihoods[i])}});
  }
  emit("alpha_curve.csv", csv.str());
  nlohmann::json doc = metadata("select-alpha");
  doc["best_alpha"] = json_number(sel.best_alpha);
  doc["curve"] = curve;
  emit("select_alpha.json", dump_json(doc));
}

void Command::replicate() {
  const ReturnPanel panel = load_input();
  const WeightTrajectory traj = run_method(cfg().method, panel, cfg().resolved());
  const Eigen::MatrixXd weights = replication_weights(traj, panel);
  const Eigen::VectorXd gross = replication_returns(weights, panel, traj.first_period);
  const Eigen::VectorXd net = adjust_fees(gross, in_.fees);
  const Eigen::VectorXd fund = panel.fund.segment(traj.first_period, traj.periods());

  emit("replication_weights.csv", dated_csv({traj.dates, panel.asset_names, weights}));
  Eigen::MatrixXd returns(gross.size(), 3);
  returns << fund, gross, net;
  const std::vector<std::string> columns{"fund", "replication_gross", "replication_net"};
  emit("replication_returns.csv", dated_csv({traj.dates, columns, returns}));

  const Eigen::VectorXd w_fund = cumulative_wealth(fund);
  const Eigen::VectorXd w_gross = cumulative_wealth(gross);
  const Eigen::VectorXd w_net = cumulative_wealth(net);
  std::ostringstream csv;
  csv << "period,fund,replication_gross,replication_net\n";
  for (Eigen::Index t = 0; t < w_fund.size(); ++t) {
    csv << t << ',' << format_number(w_fund[t]) << ',' << format_number(w_gross[t]) << ','
        << format_number(w_net[t]) << '\n';
  }
  emit("wealth.csv", csv.str());

  nlohmann::json doc = metadata("replicate");
  doc["fees"] = {{"management_annual", json_number(in_.fees.management_annual)},
                 {"incentive", json_number(in_.fees.incentive)},
                 {"periods_per_year", in_.fees.periods_per_year}};
  doc["gross_vs_fund"] = metrics_json(forecast_metrics(fund, gross));
  doc["net_vs_fund"] = metrics_json(forecast_metrics(fund, net));
  doc["final_wealth"] = {{"fund", json_number(w_fund[w_fund.size() - 1])},
                         {"replication_gross", json_number(w_gross[w_gross.size() - 1])},
                         {"replication_net", json_number(w_net[w_net.size() - 1])}};
  emit("replicate.json", dump_json(doc));
}

void Command::intraperiod() {
  if (in_.partial.empty()) throw UsageError("--partial is required for intraperiod");
  const ReturnPanel panel = load_input();
  const DatedTable partial = load_dated_csv(in_.partial);
  if (partial.columns != panel.asset_names) {
    throw UsageError("intraperiod: partial-period columns must match the palette columns");
  }
  if (partial.values.rows() < 2) {
    throw UsageError("intraperiod: the partial-period file needs at least two rows");
  }
  if (!partial.dates.empty() && partial.dates.front() <= panel.dates.back()) {
    throw UsageError("intraperiod: partial-period dates must follow the last panel date");
  }
  const WeightTrajectory traj = run_method(cfg().method, panel, cfg().resolved());
  const Eigen::VectorXd last = traj.posterior_mean.row(traj.periods() - 1).transpose();
  const SimplexWeights w(last.cwiseMax(0.0) / last.cwiseMax(0.0).sum());
  const Eigen::MatrixXd daily_cov = ewma_covariance(partial.values, in_.ewma_decay);
  const double sigma_eps_sq = cfg().settings.params.sigma_eps_sq;

  std::ostringstream csv;
  csv << "date,expected_return,volatility\n";
  Eigen::VectorXd growth = Eigen::VectorXd::Ones(panel.assets());
  IntraperiodEstimate latest;
  for (Eigen::Index d = 0; d < partial.values.rows(); ++d) {
    growth = growth.cwiseProduct((1.0 + partial.values.row(d).transpose().array()).matrix());
    const Eigen::VectorXd cumulative = growth.array() - 1.0;
    latest = intraperiod_estimate(w, cumulative, static_cast<double>(d + 1) * daily_cov,
                                  sigma_eps_sq);
    csv << partial.dates[static_cast<std::size_t>(d)] << ','
        << format_number(latest.expected_return) << ',' << format_number(latest.volatility)
        << '\n';
  }
  emit("intraperiod.csv", csv.str());
  nlohmann::json doc = metadata("intraperiod");
  doc["partial_input"] = in_.partial.filename().string();
  doc["partial_digest_fnv1a"] = file_digest(in_.partial);
  doc["ewma_decay"] = json_number(in_.ewma_decay);
  doc["weights"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < w.size(); ++i) doc["weights"].push_back(json_number(w[i]));
  doc["expected_return"] = json_number(latest.expected_return);
  doc["volatility"] = json_number(latest.volatility);
  emit("intraperiod.json", dump_json(doc));
}

void Command::sweep() {
  if (in_.replications < 1) throw UsageError("--replications must be >= 1");
  if (in_.asset_counts.empty()) throw UsageError("--assets needs at least one count");
  StudyConfig study;
  study.periods = in_.periods;
  study.replications = in_.replications;
  study.generation = cfg().settings.params;
  study.estimation = cfg().resolved();
  study.seed = cfg().seed;
  study.workers = cfg().settings.dpm.workers;
  const std::vector<SweepRow> rows = sweep_assets(study, in_.asset_counts);

  std::ostringstream csv;
  csv << "assets";
  for (Method m : study.methods) csv << ',' << method_name(m);
  csv << '\n';
  nlohmann::json table = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    csv << row.assets;
    nlohmann::json entry = {{"assets", row.assets}};
    for (std::size_t m = 0; m < study.methods.size(); ++m) {
      csv << ',' << format_number(row.median_forecast_mae[m]);
      entry[method_name(study.methods[m])] = json_number(row.median_forecast_mae[m]);
    }
    csv << '\n';
    table.push_back(entry);
  }
  emit("sweep_assets.csv", csv.str());
  nlohmann::json doc = metadata("sweep-assets");
  doc["periods"] = in_.periods;
  doc["replications"] = in_.replications;
  doc["statistic"] = "median forecast MAE";
  doc["table"] = table;
  emit("sweep_assets.json", dump_json(doc));
}

}  // namespace

int execute_command(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"Latent portfolio weight estimation from fund and asset returns.\n"
               "All returns are decimal simple returns (0.01 means 1%).",
               "dpm"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "Settings file of `key = value` lines; flags override it");
  app.set_version_flag("--version", software_version());

  Inputs in;
  RunConfig& cfg = in.config;
  DpmParams& params = cfg.settings.params;
  std::string method = "dpm";
  long long particles = cfg.settings.dpm.particles;
  long long window = cfg.settings.window.k;
  long long window_step = cfg.settings.window.step;
  std::string output_dir = ".";
  std::string input;

  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--method", method, "dpm | cndpm | cls | icls | ckalcov | ckalproj")
      ->check(CLI::IsMember({"dpm", "cndpm", "cls", "icls", "ckalcov", "ckalproj"}));
  app.add_option("--alpha", params.alpha, "Dirichlet concentration of the weight transition");
  app.add_option("--alpha0", params.alpha0, "Concentration of the initial weight prior");
  app.add_option("--sigma-eps-sq", params.sigma_eps_sq, "Observation noise scale squared");
  app.add_option("--nu", params.nu, "Student-t degrees of freedom of the observation noise");
  app.add_flag("--gaussian-obs", params.gaussian_obs, "Gaussian instead of Student-t noise");
  app.add_option("--particles", particles, "Particle count");
  app.add_flag("--ess-resampling", cfg.settings.dpm.ess_resampling,
               "Resample only when the effective sample size drops");
  app.add_option("--window", window, "Rolling least-squares window length");
  app.add_option("--window-step", window_step, "Refit the rolling window every k periods");
  app.add_option("--band-prob", cfg.settings.band_prob, "Coverage of the weight bands");
  app.add_flag("--scaled-cndpm-covariance", cfg.settings.cndpm_scaled_covariance,
               "Multiply the CN-DPM transition covariance by the gross portfolio return");
  app.add_option("--workers", cfg.settings.dpm.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Directory for artifacts");
  app.add_option("--input", input, "Panel CSV (date column, palette columns, fund column)");
  app.add_option("--fund-column", cfg.fund_column, "Name of the fund column in --input");

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic panel and its true weights");
  simulate->add_option("--n", in.assets, "Palette size");
  simulate->add_option("--t", in.periods, "Periods");
  auto* estimate = app.add_subcommand("estimate", "Run one estimator on --input");
  auto* compare = app.add_subcommand("compare", "Run all six estimators and tabulate fit");
  auto* select = app.add_subcommand("select-alpha", "Marginal likelihood over an alpha grid");
  select->add_option("--alphas", in.alphas, "Alpha grid")->delimiter(',');
  auto* replicate = app.add_subcommand("replicate", "Investable replication and wealth paths");
  replicate->add_option("--management-fee", in.fees.management_annual, "Annual management fee");
  replicate->add_option("--incentive-fee", in.fees.incentive, "Share of positive returns");
  replicate->add_option("--periods-per-year", in.fees.periods_per_year, "Periods per year");
  auto* intra = app.add_subcommand("intraperiod", "Return and volatility within a period");
  intra->add_option("--partial", in.partial, "Palette returns since the last reporting date");
  intra->add_option("--ewma-decay", in.ewma_decay, "Decay of the covariance estimate");
  auto* sweep = app.add_subcommand("sweep-assets", "Simulated forecast error against palette size");
  sweep->add_option("--assets", in.asset_counts, "Palette sizes")->delimiter(',');
  sweep->add_option("--replications", in.replications, "Replications per palette size");
  sweep->add_option("--t", in.periods, "Periods per replication");
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("dpm");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::CallForVersion&) {
    out << software_version() << '\n';
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    cfg.method = parse_method(method);
    if (particles < 1 || window < 1 || window_step < 1) {
      throw UsageError("--particles, --window and --window-step must be >= 1");
    }
    cfg.settings.dpm.particles = static_cast<Eigen::Index>(particles);
    cfg.settings.window.k = static_cast<Eigen::Index>(window);
    cfg.settings.window.step = static_cast<Eigen::Index>(window_step);
    cfg.output_dir = output_dir;
    cfg.input = input;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Command command(std::move(in), out);
  try {
    if (simulate->parsed()) command.simulate();
    if (estimate->parsed()) command.estimate();
    if (compare->parsed()) command.compare();
    if (select->parsed()) command.select_alpha();
    if (replicate->parsed()) command.replicate();
    if (intra->parsed()) command.intraperiod();
    if (sweep->parsed()) command.sweep();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitSuccess;
}

}  // namespace dpm
