#include "dpm/simulation.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dpm {

namespace {

// Degrees of freedom above which the Student-t quantile is taken as Normal.
constexpr double kNormalLimitDf = 1e7;

// Quantile of the standard Student-t at Phi(z), computed from the lower
// tail on either side so extreme z does not round the probability to 1.
double t_quantile_at_normal_score(double z, double nu) {
  const boost::math::normal normal;
  if (nu > kNormalLimitDf) return z;
  const boost::math::students_t t(nu);
  const double tail = boost::math::cdf(normal, -std::abs(z));
  const double q = boost::math::quantile(t, tail);
  return z < 0.0 ? q : -q;
}

}  // namespace

void AssetModel::validate() const {
  const Eigen::Index n = mu.size();
  if (n < 1 || sigma_sq.size() != n || nu.size() != n || corr.rows() != n ||
      corr.cols() != n) {
    throw std::invalid_argument("AssetModel: inconsistent dimensions");
  }
  if (sigma_sq.minCoeff() <= 0.0 || nu.minCoeff() <= 0.0) {
    throw std::invalid_argument("AssetModel: sigma_sq and nu must be positive");
  }
  if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      (corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("AssetModel: corr must be symmetric with unit diagonal");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-10) {
    throw std::invalid_argument("AssetModel: corr must be positive definite");
  }
}

AssetModel draw_asset_model(Eigen::Index n, Rng& rng, const AssetHyperprior& prior) {
  if (n < 1) throw std::invalid_argument("draw_asset_model: n must be >= 1");
  AssetModel m;
  m.mu.resize(n);
  m.sigma_sq.resize(n);
  m.nu.resize(n);
  std::normal_distribution<double> location(prior.mu_mean, prior.mu_sd);
  std::gamma_distribution<double> precision(prior.sigma_sq_shape,
                                            1.0 / prior.sigma_sq_scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.mu[i] = location(rng);
    m.sigma_sq[i] = 1.0 / precision(rng);
    const double u = prior.nu_inverse_upper * (1.0 - rng.uniform());
    m.nu[i] = 1.0 / u;
  }

  // Bartlett decomposition of Wishart(I, df); its inverse is IW(I, df).
  const double df = std::max(prior.wishart_df, static_cast<double>(n + 2));
  std::normal_distribution<double> standard;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::chi_squared_distribution<double> chi2(df - static_cast<double>(i));
    a(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = standard(rng);
  }
  const Eigen::MatrixXd wishart = a * a.transpose();
  const Eigen::MatrixXd cov = wishart.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  m.corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  m.corr = 0.5 * (m.corr + m.corr.transpose());
  m.corr.diagonal().setOnes();
  return m;
}

Eigen::MatrixXd simulate_assets(const AssetModel& model, Eigen::Index periods, Rng& rng) {
  model.validate();
  if (periods < 1) throw std::invalid_argument("simulate_assets: T must be >= 1");
  const Eigen::Index n = model.assets();
  const Eigen::MatrixXd chol = model.corr.llt().matrixL();
  const Eigen::VectorXd scale = model.sigma_sq.cwiseSqrt();
  std::normal_distribution<double> standard;
  Eigen::MatrixXd out(periods, n);
  Eigen::VectorXd eps(n);
  for (Eigen::Index t = 0; t < periods; ++t) {
    bool accepted = false;
    for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
      for (Eigen::Index i = 0; i < n; ++i) eps[i] = standard(rng);
      const Eigen::VectorXd z = chol * eps;
      for (Eigen::Index i = 0; i < n; ++i) {
        out(t, i) = model.mu[i] + scale[i] * t_quantile_at_normal_score(z[i], model.nu[i]);
      }
      accepted = out.row(t).minCoeff() > -1.0;
    }
    if (!accepted) {
      throw std::runtime_error(
          "simulate_assets: 1000 consecutive draws produced a return <= -100%");
    }
  }
  return out;
}

SimulatedFund simulate_dirichlet_fund(const Eigen::MatrixXd& returns,
                                      const DpmParams& params, const SimplexWeights& w0,
                                      Rng& rng) {
  params.validate();
  const Eigen::Index periods = returns.rows();
  const Eigen::Index n = returns.cols();
  if (periods < 1 || w0.size() != n) {
    throw std::invalid_argument("simulate_dirichlet_fund: shape mismatch");
  }
  SimulatedFund fund;
  fund.weights.resize(periods, n);
  fund.returns.resize(periods);
  std::student_t_distribution<double> student(params.nu);
  std::normal_distribution<double> normal;
  const double scale = std::sqrt(params.sigma_eps_sq);
  SimplexWeights w = w0;
  for (Eigen::Index t = 0; t < periods; ++t) {
    if (t > 0) {
      w = sample_dirichlet(drift(w, returns.row(t - 1).transpose()), params.alpha, rng);
    }
    fund.weights.row(t) = w.values().transpose();
    const double noise = params.gaussian_obs ? normal(rng) : student(rng);
    fund.returns[t] = w.values().dot(returns.row(t).transpose()) + scale * noise;
  }
  return fund;
}

Eigen::MatrixXd contrarian_weights(const Eigen::MatrixXd& returns,
                                   const Eigen::MatrixXd& w_tilde, Eigen::Index lookback) {
  if (lookback < 1) {
    throw std::invalid_argument("contrarian_weights: lookback must be >= 1");
  }
  if (w_tilde.rows() != returns.rows() || w_tilde.cols() != returns.cols()) {
    throw std::invalid_argument("contrarian_weights: returns and w_tilde shapes differ");
  }
  const Eigen::Index periods = returns.rows();
  if (periods <= lookback) {
    throw std::invalid_argument("contrarian_weights: need more periods than the lookback");
  }
  Eigen::MatrixXd out(periods - lookback, returns.cols());
  for (Eigen::Index t = lookback; t < periods; ++t) {
    const Eigen::RowVectorXd trailing = returns.middleRows(t - lookback, lookback).colwise().sum();
    const Eigen::RowVectorXd deviation = trailing.array() - trailing.mean();
    out.row(t - lookback) = w_tilde.row(t) - deviation;
  }
  return out;
}

Eigen::MatrixXd market_cap_weights(const Eigen::MatrixXd& returns,
                                   const SimplexWeights& w0, double alpha, Rng& rng) {
  if (w0.size() != returns.cols()) {
    throw std::invalid_argument("market_cap_weights: shape mismatch");
  }
  Eigen::MatrixXd out(returns.rows(), returns.cols());
  SimplexWeights w = w0;
  for (Eigen::Index t = 0; t < returns.rows(); ++t) {
    if (t > 0) w = sample_dirichlet(drift(w, returns.row(t - 1).transpose()), alpha, rng);
    out.row(t) = w.values().transpose();
  }
  return out;
}

}  // namespace dpm
