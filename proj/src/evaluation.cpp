#include "dpm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpm {

ForecastReport forecast_metrics(const Eigen::VectorXd& actual,
                                const Eigen::VectorXd& forecast) {
  if (actual.size() != forecast.size()) {
    throw std::invalid_argument("forecast_metrics: series lengths differ");
  }
  const Eigen::Index t = actual.size();
  if (t < 2) {
    throw std::invalid_argument("forecast_metrics: need at least two periods");
  }
  const double count = static_cast<double>(t);
  ForecastReport r;
  r.residuals = actual - forecast;
  r.f_rmse = std::sqrt(r.residuals.squaredNorm() / count);
  r.f_mae = r.residuals.cwiseAbs().sum() / count;
  r.mean = forecast.mean();
  r.std_dev = std::sqrt((forecast.array() - r.mean).square().sum() / (count - 1.0));

  const Eigen::ArrayXd a = actual.array() - actual.mean();
  const Eigen::ArrayXd f = forecast.array() - r.mean;
  const double ss_actual = a.square().sum();
  if (ss_actual > 0.0) {
    r.f_r2 = 1.0 - r.residuals.squaredNorm() / ss_actual;
    const double ss_forecast = f.square().sum();
    if (ss_forecast > 0.0) {
      r.f_corr = std::clamp((a * f).sum() / std::sqrt(ss_actual * ss_forecast), -1.0, 1.0);
    }
  }
  return r;
}

WeightError weight_mae(const Eigen::MatrixXd& true_weights,
                       const Eigen::MatrixXd& estimated) {
  if (true_weights.rows() != estimated.rows() || true_weights.cols() != estimated.cols()) {
    throw std::invalid_argument("weight_mae: shape mismatch");
  }
  if (true_weights.size() == 0) {
    throw std::invalid_argument("weight_mae: empty input");
  }
  WeightError e;
  e.per_asset = (true_weights - estimated).cwiseAbs().colwise().mean().transpose();
  e.overall = e.per_asset.mean();
  return e;
}

Eigen::MatrixXd replication_weights(const WeightTrajectory& trajectory,
                                    const ReturnPanel& panel) {
  if (trajectory.assets() != panel.assets() ||
      trajectory.first_period + trajectory.periods() > panel.periods()) {
    throw std::invalid_argument("replication_weights: trajectory does not fit the panel");
  }
  for (Eigen::Index t = 0; t < trajectory.periods(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const auto j = static_cast<std::size_t>(trajectory.first_period + t);
    if (!trajectory.dates.empty() && trajectory.dates[i] != panel.dates[j]) {
      throw std::invalid_argument("replication_weights: trajectory dates are misaligned at '" +
                                  trajectory.dates[i] + "'");
    }
  }
  return trajectory.prior_mean;
}

Eigen::VectorXd replication_returns(const Eigen::MatrixXd& weights,
                                    const ReturnPanel& panel, Eigen::Index first_period) {
  if (weights.cols() != panel.assets() || first_period + weights.rows() > panel.periods()) {
    throw std::invalid_argument("replication_returns: weights do not fit the panel");
  }
  // Same contiguous dot product the estimators use for forecast_return, so
  // the two series agree bit for bit.
  Eigen::VectorXd out(weights.rows());
  for (Eigen::Index t = 0; t < weights.rows(); ++t) {
    const Eigen::VectorXd w = weights.row(t).transpose();
    const Eigen::VectorXd r = panel.palette.row(first_period + t).transpose();
    out[t] = w.dot(r);
  }
  return out;
}

Eigen::VectorXd adjust_fees(const Eigen::VectorXd& returns, const FeeSchedule& fees) {
  if (fees.management_annual < 0.0 || fees.management_annual >= 1.0 ||
      fees.incentive < 0.0 || fees.incentive >= 1.0 || fees.periods_per_year < 1) {
    throw std::invalid_argument("adjust_fees: fee fractions must be in [0, 1)");
  }
  const double accrual = fees.management_annual / fees.periods_per_year;
  Eigen::VectorXd out(returns.size());
  for (Eigen::Index t = 0; t < returns.size(); ++t) {
    const double after_mgmt = returns[t] - accrual;
    out[t] = after_mgmt - fees.incentive * std::max(after_mgmt, 0.0);
  }
  return out;
}

Eigen::VectorXd cumulative_wealth(const Eigen::VectorXd& returns, double initial) {
  if (!(initial > 0.0)) {
    throw std::invalid_argument("cumulative_wealth: initial wealth must be > 0");
  }
  Eigen::VectorXd path(returns.size() + 1);
  path[0] = initial;
  for (Eigen::Index t = 0; t < returns.size(); ++t) {
    if (returns[t] <= -1.0) {
      throw std::domain_error("cumulative_wealth: return <= -100%");
    }
    path[t + 1] = path[t] * (1.0 + returns[t]);
  }
  return path;
}

IntraperiodEstimate intraperiod_estimate(const SimplexWeights& w_post,
                                         const Eigen::VectorXd& r_partial,
                                         const Eigen::MatrixXd& cov_partial,
                                         double sigma_eps_sq) {
  const Eigen::Index n = w_post.size();
  if (r_partial.size() != n || cov_partial.rows() != n || cov_partial.cols() != n) {
    throw std::invalid_argument("intraperiod_estimate: shape mismatch");
  }
  if (sigma_eps_sq < 0.0) {
    throw std::invalid_argument("intraperiod_estimate: sigma_eps_sq must be >= 0");
  }
  const Eigen::MatrixXd sym = 0.5 * (cov_partial + cov_partial.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("intraperiod_estimate: covariance is not PSD");
  }
  const Eigen::VectorXd& w = w_post.values();
  IntraperiodEstimate e;
  e.expected_return = w.dot(r_partial);
  e.volatility = std::sqrt(std::max(w.dot(sym * w), 0.0) + sigma_eps_sq);
  return e;
}

Eigen::MatrixXd ewma_covariance(const Eigen::MatrixXd& returns, double lambda) {
  const Eigen::Index periods = returns.rows();
  if (periods < 2) {
    throw std::invalid_argument("ewma_covariance: need at least two periods");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("ewma_covariance: lambda must be in (0, 1)");
  }
  Eigen::VectorXd w(periods);
  for (Eigen::Index t = 0; t < periods; ++t) {
    w[t] = std::pow(lambda, static_cast<double>(periods - 1 - t));
  }
  w /= w.sum();
  const Eigen::RowVectorXd mean = w.transpose() * returns;
  const Eigen::MatrixXd centered = returns.rowwise() - mean;
  const double correction = 1.0 / (1.0 - w.squaredNorm());
  Eigen::MatrixXd cov = correction * (centered.transpose() * w.asDiagonal() * centered);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace dpm
