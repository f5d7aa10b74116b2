#pragma once

#include <Eigen/Dense>

#include "dpm/core_model.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

struct WindowConfig {
  Eigen::Index k = 24;
  Eigen::Index step = 1;

  void validate(Eigen::Index assets) const;
};

enum class LsMethod { cls, icls };

inline constexpr double kMaxNormalCondition = 1e12;

// Least squares under the budget constraint 1'w = 1 (closed form).
Eigen::VectorXd cls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Least squares under 1'w = 1 and w >= 0, solved by a primal active-set
// method. Deterministic; throws std::runtime_error after 100 n iterations.
Eigen::VectorXd icls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Constrained-LS covariance of cls_fit's estimate. Residual variance uses
// k - n + 1 degrees of freedom (n - 1 free parameters).
Eigen::MatrixXd cls_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w);

// Rolling-window fit. Output row j covers panel period t = k + j (0-based):
//   prior_mean     fit on rows [t - k, t)       (forecast weights for t)
//   posterior_mean fit on rows (t - k, t]       (in-sample weights for t)
// so the trajectory has T - k rows. CLS emits Normal confidence bands around
// the posterior fit; ICLS emits none (has_bands = false).
WeightTrajectory rolling_fit(const ReturnPanel& panel, const WindowConfig& cfg,
                             LsMethod method, double band_prob = 0.95);

}  // namespace dpm
