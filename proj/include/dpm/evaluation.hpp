#pragma once

#include <Eigen/Dense>

#include <optional>

#include "dpm/core_model.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

struct ForecastReport {
  double f_rmse = 0.0;
  double f_mae = 0.0;
  // Undefined (nullopt) when the actual series is constant.
  std::optional<double> f_corr;
  std::optional<double> f_r2;
  double mean = 0.0;     // of the forecast series
  double std_dev = 0.0;  // of the forecast series, T - 1 denominator
  Eigen::VectorXd residuals;  // actual - forecast
};

ForecastReport forecast_metrics(const Eigen::VectorXd& actual,
                                const Eigen::VectorXd& forecast);

struct WeightError {
  Eigen::VectorXd per_asset;
  double overall = 0.0;
};

WeightError weight_mae(const Eigen::MatrixXd& true_weights,
                       const Eigen::MatrixXd& estimated);

// Investable weights: the trajectory's one-step-ahead predictive mean
// E[w_t | F_{t-1}]. For the analytic filters this is exactly
// drift(posterior mean_{t-1}, r_{t-1}); for the particle filter it is the
// cloud average of the drifted particles. Rows align with the trajectory.
Eigen::MatrixXd replication_weights(const WeightTrajectory& trajectory,
                                    const ReturnPanel& panel);

// Row-wise w_t . r_t over the trajectory's periods.
Eigen::VectorXd replication_returns(const Eigen::MatrixXd& weights,
                                    const ReturnPanel& panel, Eigen::Index first_period);

struct FeeSchedule {
  double management_annual = 0.015;
  double incentive = 0.10;
  int periods_per_year = 12;
};

// Per period: subtract management_annual / periods_per_year, then take
// `incentive` of whatever positive return remains. No high-water mark.
Eigen::VectorXd adjust_fees(const Eigen::VectorXd& returns, const FeeSchedule& fees = {});

// (T + 1)-vector starting at `initial`.
Eigen::VectorXd cumulative_wealth(const Eigen::VectorXd& returns, double initial = 1.0);

struct IntraperiodEstimate {
  double expected_return = 0.0;
  double volatility = 0.0;
};

IntraperiodEstimate intraperiod_estimate(const SimplexWeights& w_post,
                                         const Eigen::VectorXd& r_partial,
                                         const Eigen::MatrixXd& cov_partial,
                                         double sigma_eps_sq);

inline constexpr double kDefaultEwmaDecay = 0.94;

// Exponentially weighted covariance, weights proportional to lambda^(T - tau)
// normalized to one, around the weighted mean, with the reliability-weight
// correction 1 / (1 - sum w^2) so that lambda -> 1 recovers the sample
// covariance.
Eigen::MatrixXd ewma_covariance(const Eigen::MatrixXd& returns,
                                double lambda = kDefaultEwmaDecay);

}  // namespace dpm
