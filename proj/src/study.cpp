#include "dpm/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dpm/gaussian_estimators.hpp"
#include "dpm/parallel.hpp"

namespace dpm {

std::string method_name(Method method) {
  switch (method) {
    case Method::dpm: return "dpm";
    case Method::cndpm: return "cndpm";
    case Method::cls: return "cls";
    case Method::icls: return "icls";
    case Method::ckalcov: return "ckalcov";
    case Method::ckalproj: return "ckalproj";
  }
  throw std::invalid_argument("method_name: unknown method");
}

Method parse_method(const std::string& name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected dpm, cndpm, cls, icls, ckalcov or ckalproj)");
}

WeightTrajectory run_method(Method method, const ReturnPanel& panel,
                            const EstimatorSettings& settings) {
  switch (method) {
    case Method::dpm: {
      DpmOptions options = settings.dpm;
      options.band_prob = settings.band_prob;
      return filter_dpm(panel, settings.params, options);
    }
    case Method::cndpm: {
      CndpmOptions options;
      options.scaled_covariance = settings.cndpm_scaled_covariance;
      options.band_prob = settings.band_prob;
      return cndpm_filter(panel, settings.params, options);
    }
    case Method::cls:
      return rolling_fit(panel, settings.window, LsMethod::cls, settings.band_prob);
    case Method::icls:
      return rolling_fit(panel, settings.window, LsMethod::icls, settings.band_prob);
    case Method::ckalcov:
    case Method::ckalproj: {
      const KalmanConfig cfg = KalmanConfig::from_dpm(panel.assets(), settings.params);
      const ConstraintMethod constraint = method == Method::ckalcov
                                              ? ConstraintMethod::covariance_restricted
                                              : ConstraintMethod::state_projection;
      WeightTrajectory traj = constrained_kalman_filter(panel, cfg, constraint,
                                                        settings.band_prob);
      traj.method = method_name(method);
      return traj;
    }
  }
  throw std::invalid_argument("run_method: unknown method");
}

MethodScore score_trajectory(Method method, const WeightTrajectory& trajectory,
                             const ReturnPanel& panel, Eigen::Index first_period,
                             const Eigen::MatrixXd* truth) {
  const Eigen::Index offset = first_period - trajectory.first_period;
  const Eigen::Index count = panel.periods() - first_period;
  if (offset < 0 || offset + count > trajectory.periods()) {
    throw std::invalid_argument("score_trajectory: trajectory does not cover the scored range");
  }
  MethodScore score;
  score.method = method;
  const Eigen::VectorXd actual = panel.fund.segment(first_period, count);
  score.forecast = forecast_metrics(actual, trajectory.forecast_return.segment(offset, count));
  score.fitted = forecast_metrics(actual, trajectory.fitted_return.segment(offset, count));
  if (truth != nullptr) {
    if (truth->rows() != panel.periods() || truth->cols() != panel.assets()) {
      throw std::invalid_argument("score_trajectory: truth shape does not match the panel");
    }
    score.weights = dpm::weight_mae(truth->middleRows(first_period, count),
                                    trajectory.posterior_mean.middleRows(offset, count));
  }
  return score;
}

std::vector<std::string> synthetic_dates(Eigen::Index periods, bool daily) {
  using namespace std::chrono;
  std::vector<std::string> dates;
  dates.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(periods, 0)));
  const year_month_day origin{year{2000}, January, day{1}};
  char buf[16];
  for (Eigen::Index t = 0; t < periods; ++t) {
    year_month_day ymd = origin;
    if (daily) {
      ymd = year_month_day{sys_days{origin} + days{t}};
    } else {
      ymd = origin + months{t};
    }
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    dates.emplace_back(buf);
  }
  return dates;
}

namespace {

std::vector<std::string> default_asset_names(Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("a" + std::to_string(i + 1));
  return names;
}

}  // namespace

SimulatedPanel simulate_panel(Eigen::Index assets, Eigen::Index periods,
                              const DpmParams& generation, Rng& rng,
                              const AssetHyperprior& hyperprior) {
  generation.validate();
  const AssetModel model = draw_asset_model(assets, rng, hyperprior);
  const Eigen::MatrixXd returns = simulate_assets(model, periods, rng);
  const SimplexWeights w0 = sample_dirichlet(SimplexWeights::uniform(assets), generation.alpha0, rng);
  SimulatedFund fund = simulate_dirichlet_fund(returns, generation, w0, rng);

  SimulatedPanel out;
  out.panel.dates = synthetic_dates(periods);
  out.panel.asset_names = default_asset_names(assets);
  out.panel.palette = returns;
  out.panel.fund = std::move(fund.returns);
  out.weights = std::move(fund.weights);
  out.panel.validate();
  return out;
}

namespace {

template <typename Metric>
std::vector<double> collect(const StudyResult& result, Method method, Metric metric) {
  const auto it = std::find(result.methods.begin(), result.methods.end(), method);
  if (it == result.methods.end()) {
    throw std::invalid_argument("StudyResult: method '" + method_name(method) + "' not run");
  }
  const auto m = static_cast<std::size_t>(it - result.methods.begin());
  std::vector<double> values;
  values.reserve(result.scores.size());
  for (const auto& rep : result.scores) values.push_back(metric(rep[m]));
  return values;
}

}  // namespace

std::vector<double> StudyResult::forecast_mae(Method method) const {
  return collect(*this, method, [](const MethodScore& s) { return s.forecast.f_mae; });
}

std::vector<double> StudyResult::forecast_r2(Method method) const {
  return collect(*this, method, [](const MethodScore& s) {
    return s.forecast.f_r2.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

std::vector<double> StudyResult::forecast_rmse(Method method) const {
  return collect(*this, method, [](const MethodScore& s) { return s.forecast.f_rmse; });
}

std::vector<double> StudyResult::fitted_rmse(Method method) const {
  return collect(*this, method, [](const MethodScore& s) { return s.fitted.f_rmse; });
}

std::vector<double> StudyResult::weight_mae(Method method) const {
  return collect(*this, method, [](const MethodScore& s) {
    return s.weights ? s.weights->overall : std::numeric_limits<double>::quiet_NaN();
  });
}

StudyResult run_study(const StudyConfig& config) {
  if (config.replications < 1) {
    throw std::invalid_argument("run_study: need at least one replication");
  }
  if (config.methods.empty()) throw std::invalid_argument("run_study: no methods selected");
  StudyResult result;
  result.methods = config.methods;
  result.scores.resize(static_cast<std::size_t>(config.replications));
  const Eigen::Index first_period = config.estimation.window.k;
  if (first_period >= config.periods) {
    throw std::invalid_argument("run_study: periods must exceed the rolling window length");
  }

  parallel_for(config.replications, config.workers, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t r = begin; r < end; ++r) {
      Rng rng = Rng::substream(config.seed, {static_cast<std::uint64_t>(r)});
      const SimulatedPanel sim = simulate_panel(config.assets, config.periods,
                                                config.generation, rng, config.hyperprior);
      EstimatorSettings settings = config.estimation;
      settings.dpm.seed = rng();
      if (config.workers > 1) settings.dpm.workers = 1;
      auto& row = result.scores[static_cast<std::size_t>(r)];
      for (Method m : config.methods) {
        const WeightTrajectory traj = run_method(m, sim.panel, settings);
        row.push_back(score_trajectory(m, traj, sim.panel, first_period, &sim.weights));
      }
    }
  });
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<SweepRow> sweep_assets(const StudyConfig& base,
                                   const std::vector<Eigen::Index>& asset_counts) {
  std::vector<SweepRow> rows;
  for (Eigen::Index n : asset_counts) {
    StudyConfig cfg = base;
    cfg.assets = n;
    cfg.seed = Rng::substream(base.seed, {0x5eedULL, static_cast<std::uint64_t>(n)})();
    cfg.estimation.window.k = std::max(base.estimation.window.k, n + 1);
    const StudyResult result = run_study(cfg);
    SweepRow row;
    row.assets = n;
    for (Method m : result.methods) row.median_forecast_mae.push_back(median(result.forecast_mae(m)));
    rows.push_back(std::move(row));
  }
  return rows;
}

SimulatedPanel simulate_contrarian_panel(const ContrarianConfig& config, Rng& rng) {
  const Eigen::Index n = config.assets;
  if (n < 2) throw std::invalid_argument("simulate_contrarian_panel: need at least two assets");
  AssetModel model;
  model.mu = Eigen::VectorXd::Constant(n, config.daily_mu);
  model.sigma_sq = Eigen::VectorXd::Constant(n, config.daily_sigma * config.daily_sigma);
  model.nu = Eigen::VectorXd::Constant(n, config.daily_nu);
  model.corr = Eigen::MatrixXd::Constant(n, n, config.daily_corr);
  model.corr.diagonal().setOnes();

  const Eigen::Index total = config.periods + config.lookback;
  const Eigen::MatrixXd returns = simulate_assets(model, total, rng);
  const SimplexWeights w0 = sample_dirichlet(SimplexWeights::uniform(n), config.reference_alpha0, rng);
  const Eigen::MatrixXd reference = market_cap_weights(returns, w0, config.reference_alpha, rng);
  const Eigen::MatrixXd weights = contrarian_weights(returns, reference, config.lookback);

  SimulatedPanel out;
  out.panel.dates = synthetic_dates(config.periods, true);
  out.panel.asset_names = default_asset_names(n);
  out.panel.palette = returns.bottomRows(config.periods);
  out.panel.fund = weights.cwiseProduct(out.panel.palette).rowwise().sum();
  out.weights = weights;
  out.panel.validate();
  return out;
}

}  // namespace dpm
