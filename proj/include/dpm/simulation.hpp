#pragma once

#include <Eigen/Dense>

#include "dpm/core_model.hpp"
#include "dpm/random.hpp"

namespace dpm {

// Per-asset location-scale Student-t marginals joined by a Gaussian copula.
struct AssetModel {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma_sq;
  Eigen::VectorXd nu;
  Eigen::MatrixXd corr;

  Eigen::Index assets() const { return mu.size(); }
  void validate() const;
};

// Hyperprior for draw_asset_model. Inverse-Gamma is shape/scale:
// density ~ x^{-(shape+1)} exp(-scale / x), mean scale / (shape - 1).
// nu_i = 1 / u with u ~ Uniform(0, nu_inverse_upper), so nu_i >= 2 by default.
struct AssetHyperprior {
  double mu_mean = 0.007;
  double mu_sd = 0.003;
  double sigma_sq_shape = 2.5;
  double sigma_sq_scale = 0.004;
  double nu_inverse_upper = 0.5;
  // Inverse-Wishart(I, df) with df = max(wishart_df, n + 2); the floor keeps
  // the draw proper for palettes larger than the default df supports.
  double wishart_df = 8.0;
};

AssetModel draw_asset_model(Eigen::Index n, Rng& rng,
                            const AssetHyperprior& prior = {});

// T x n simple returns. A period with any return <= -1 is redrawn
// (at most 1000 attempts).
Eigen::MatrixXd simulate_assets(const AssetModel& model, Eigen::Index periods, Rng& rng);

struct SimulatedFund {
  Eigen::MatrixXd weights;  // T x n ground truth
  Eigen::VectorXd returns;  // T
};

// w_1 = w0, w_t ~ Dir(alpha drift(w_{t-1}, r_{t-1})), and
// r_hf_t = w_t' r_t + sqrt(sigma_eps_sq) e_t with e_t standard Student-t(nu)
// (standard Normal when params.gaussian_obs is set).
SimulatedFund simulate_dirichlet_fund(const Eigen::MatrixXd& returns,
                                      const DpmParams& params, const SimplexWeights& w0,
                                      Rng& rng);

// Contrarian tilt away from reference weights:
//   w_t = w~_t - (R_{t-1} - mean_i R_{t-1,i}),  R_{t-1} = sum_{s=t-L}^{t-1} r_s.
// Returns (T - L) x n weights; row j is period L + j. Rows sum to one but may
// contain negative entries.
Eigen::MatrixXd contrarian_weights(const Eigen::MatrixXd& returns,
                                   const Eigen::MatrixXd& w_tilde,
                                   Eigen::Index lookback = 30);

// Buy-and-hold reference weights perturbed by slow Dirichlet reallocation:
// w~_1 = w0, w~_t ~ Dir(alpha drift(w~_{t-1}, r_{t-1})).
Eigen::MatrixXd market_cap_weights(const Eigen::MatrixXd& returns,
                                   const SimplexWeights& w0, double alpha, Rng& rng);

}  // namespace dpm
