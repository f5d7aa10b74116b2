#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpm/core_model.hpp"
#include "dpm/evaluation.hpp"
#include "dpm/ls_estimators.hpp"
#include "dpm/simulation.hpp"
#include "dpm/smc_estimator.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

enum class Method { dpm, cndpm, cls, icls, ckalcov, ckalproj };

inline constexpr std::array<Method, 6> kAllMethods = {
    Method::dpm, Method::cndpm, Method::cls, Method::icls, Method::ckalcov, Method::ckalproj};

std::string method_name(Method method);
// Accepts the lowercase names above; throws std::invalid_argument otherwise.
Method parse_method(const std::string& name);

// Everything an estimator run needs besides the panel.
struct EstimatorSettings {
  DpmParams params;
  DpmOptions dpm;
  WindowConfig window;
  double band_prob = 0.95;
  bool cndpm_scaled_covariance = false;
};

WeightTrajectory run_method(Method method, const ReturnPanel& panel,
                            const EstimatorSettings& settings);

struct MethodScore {
  Method method = Method::dpm;
  ForecastReport forecast;  // prior-mean weights against the fund
  ForecastReport fitted;    // posterior-mean weights against the fund
  std::optional<WeightError> weights;  // posterior mean against the truth
};

// Scores `trajectory` over the panel periods [first_period, T). `truth`, if
// given, holds the true weights for every panel period.
MethodScore score_trajectory(Method method, const WeightTrajectory& trajectory,
                             const ReturnPanel& panel, Eigen::Index first_period,
                             const Eigen::MatrixXd* truth = nullptr);

// Dates for synthetic panels: month starts from 2000-01-01, or consecutive
// calendar days from the same origin.
std::vector<std::string> synthetic_dates(Eigen::Index periods, bool daily = false);

struct SimulatedPanel {
  ReturnPanel panel;
  Eigen::MatrixXd weights;  // T x n ground truth
};

// Draws an asset model, simulates T periods of returns and a Dirichlet fund
// with w0 ~ Dir(alpha0 / n, ..., alpha0 / n).
SimulatedPanel simulate_panel(Eigen::Index assets, Eigen::Index periods,
                              const DpmParams& generation, Rng& rng,
                              const AssetHyperprior& hyperprior = {});

struct StudyConfig {
  Eigen::Index assets = 6;
  Eigen::Index periods = 120;
  Eigen::Index replications = 100;
  DpmParams generation;
  EstimatorSettings estimation;
  AssetHyperprior hyperprior;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::uint64_t seed = 1;
  // Replications run concurrently; each uses its own generator, so results
  // do not depend on this.
  unsigned workers = 1;
};

struct StudyResult {
  std::vector<Method> methods;
  // scores[r][m]: replication r, method methods[m].
  std::vector<std::vector<MethodScore>> scores;

  std::vector<double> forecast_mae(Method method) const;
  std::vector<double> forecast_r2(Method method) const;
  std::vector<double> forecast_rmse(Method method) const;
  std::vector<double> fitted_rmse(Method method) const;
  std::vector<double> weight_mae(Method method) const;
};

// Replication r uses the generator substream (seed, r) for the data and
// derives the particle-filter seed from it. All methods are scored over
// [window.k, T) so the rolling windows have a forecast for every period.
StudyResult run_study(const StudyConfig& config);

// Median with the two middle values averaged; NaN for an empty input.
double median(std::vector<double> values);

struct SweepRow {
  Eigen::Index assets = 0;
  std::vector<double> median_forecast_mae;  // aligned with StudyResult::methods
};

std::vector<SweepRow> sweep_assets(const StudyConfig& base,
                                   const std::vector<Eigen::Index>& asset_counts);

// Synthetic contrarian fund: daily palette returns, slowly varying
// market-cap reference weights, and the noiseless contrarian tilt.
struct ContrarianConfig {
  Eigen::Index assets = 4;
  Eigen::Index periods = 500;  // periods after the lookback warm-up
  Eigen::Index lookback = 30;
  double reference_alpha = 1e5;
  double reference_alpha0 = 400.0;
  double daily_mu = 0.0004;
  double daily_sigma = 0.012;
  double daily_nu = 5.0;
  double daily_corr = 0.6;
};

SimulatedPanel simulate_contrarian_panel(const ContrarianConfig& config, Rng& rng);

}  // namespace dpm
