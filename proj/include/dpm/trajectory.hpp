#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace dpm {

// Common estimator output. Row t describes period t of the input panel
// (or of the estimable sub-range for rolling-window methods).
//
//   prior_mean      E[w_t | F_{t-1}], the one-step-ahead weights
//   posterior_mean  E[w_t | F_t]
//   lower/upper     equal-tailed credible (or confidence) band around the
//                   posterior; only meaningful when has_bands is set
//   forecast_return prior_mean_t . r_pa_t
//   fitted_return   posterior_mean_t . r_pa_t (the in-sample, non-forecasted fit)
struct WeightTrajectory {
  std::string method;
  std::vector<std::string> dates;
  std::vector<std::string> asset_names;
  Eigen::MatrixXd prior_mean;
  Eigen::MatrixXd posterior_mean;
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;
  Eigen::VectorXd forecast_return;
  Eigen::VectorXd fitted_return;
  Eigen::VectorXd actual_return;
  bool has_bands = true;
  double band_prob = 0.95;
  // Only the particle filter produces a marginal likelihood; NaN otherwise.
  double log_marginal_likelihood = std::numeric_limits<double>::quiet_NaN();
  // Index of the first trajectory row within the source panel.
  Eigen::Index first_period = 0;

  Eigen::Index periods() const { return posterior_mean.rows(); }
  Eigen::Index assets() const { return posterior_mean.cols(); }

  void resize(Eigen::Index periods, Eigen::Index assets) {
    dates.resize(static_cast<std::size_t>(periods));
    prior_mean.setZero(periods, assets);
    posterior_mean.setZero(periods, assets);
    lower.setZero(periods, assets);
    upper.setZero(periods, assets);
    forecast_return.setZero(periods);
    fitted_return.setZero(periods);
    actual_return.setZero(periods);
  }
};

}  // namespace dpm
