#pragma once

#include <Eigen/Dense>

#include <vector>

#include "dpm/core_model.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

// Random-walk Kalman model w_t = drift(w_{t-1}) + eta_t, eta_t ~ N(0, Q).
struct KalmanConfig {
  Eigen::MatrixXd q;
  Eigen::MatrixXd sigma0;
  Eigen::VectorXd mu0;
  double sigma_eps_sq = 0.01;
  double alpha = 1600.0;

  // Q = spherical_covariance(n, alpha), Sigma0 = spherical_covariance(n, alpha0),
  // mu0 uniform.
  static KalmanConfig from_dpm(Eigen::Index n, const DpmParams& params);
  void validate() const;
};

enum class ConstraintMethod { covariance_restricted, state_projection };

// Symmetric-Dirichlet component variance at the uniform mean on the
// diagonal, -v/(n-1) off the diagonal, so every row sums to zero.
Eigen::MatrixXd spherical_covariance(Eigen::Index n, double alpha);

// (I - S 1 (1'S1)^-1 1') S, symmetrized.
Eigen::MatrixXd project_covariance(const Eigen::MatrixXd& sigma);

struct ProjectedState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Projects (mu, Sigma) onto the hyperplane 1'w = 1.
ProjectedState project_state(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

// Scalar-observation Kalman update of `belief` against r_hf = w' r_pa + e.
GaussianBelief kalman_update(const GaussianBelief& belief, const Eigen::VectorXd& r_pa,
                             double r_hf, double sigma_eps_sq);

struct CndpmOptions {
  // Multiply the transition covariance by the gross portfolio return
  // xi = mu'(1 + r).
  bool scaled_covariance = false;
  double band_prob = 0.95;
};

// Conditionally Normal approximation of the Dirichlet portfolio model.
WeightTrajectory cndpm_filter(const ReturnPanel& panel, double alpha,
                              double sigma_eps_sq, const Eigen::VectorXd& mu0,
                              const Eigen::MatrixXd& sigma0,
                              const CndpmOptions& options = {});

// Defaults: mu0 uniform, Sigma0 = spherical_covariance(n, params.alpha0).
WeightTrajectory cndpm_filter(const ReturnPanel& panel, const DpmParams& params,
                              const CndpmOptions& options = {});

WeightTrajectory constrained_kalman_filter(const ReturnPanel& panel,
                                           const KalmanConfig& cfg,
                                           ConstraintMethod method,
                                           double band_prob = 0.95);

// Per-period prior and posterior beliefs behind the trajectories above.
struct GaussianPath {
  std::vector<GaussianBelief> prior;
  std::vector<GaussianBelief> posterior;
};

GaussianPath constrained_kalman_path(const ReturnPanel& panel, const KalmanConfig& cfg,
                                     ConstraintMethod method);

GaussianPath cndpm_path(const ReturnPanel& panel, double alpha, double sigma_eps_sq,
                        const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                        bool scaled_covariance = false);

}  // namespace dpm
