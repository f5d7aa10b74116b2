#include "dpm/gaussian_estimators.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>

namespace dpm {

namespace {

constexpr double kDegenerateMass = 1e-14;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

bool is_symmetric_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

double row_sum_residual(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.rowwise().sum().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd zero_sum_covariance(Eigen::Index n, double alpha) {
  return n == 1 ? Eigen::MatrixXd::Zero(1, 1) : spherical_covariance(n, alpha);
}

double normal_band_z(double band_prob) {
  if (!(band_prob > 0.0 && band_prob < 1.0)) {
    throw std::invalid_argument("band probability must be in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * band_prob);
}

WeightTrajectory summarize(const ReturnPanel& panel, const GaussianPath& path,
                           const std::string& method, double band_prob) {
  const double z = normal_band_z(band_prob);
  WeightTrajectory traj;
  traj.method = method;
  traj.resize(panel.periods(), panel.assets());
  traj.dates = panel.dates;
  traj.asset_names = panel.asset_names;
  traj.band_prob = band_prob;
  traj.actual_return = panel.fund;
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    const auto& prior = path.prior[static_cast<std::size_t>(t)];
    const auto& post = path.posterior[static_cast<std::size_t>(t)];
    const Eigen::VectorXd sd = post.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    traj.prior_mean.row(t) = prior.mean.transpose();
    traj.posterior_mean.row(t) = post.mean.transpose();
    traj.lower.row(t) = (post.mean - z * sd).transpose();
    traj.upper.row(t) = (post.mean + z * sd).transpose();
    const Eigen::VectorXd r = panel.palette.row(t).transpose();
    traj.forecast_return[t] = prior.mean.dot(r);
    traj.fitted_return[t] = post.mean.dot(r);
  }
  return traj;
}

// The drifted mean of a Gaussian filter can leave the simplex; the Dirichlet
// moments are taken at its closest non-negative renormalization so the
// transition covariance stays PSD.
SimplexWeights clamp_to_simplex(const Eigen::VectorXd& m) {
  Eigen::VectorXd c = m.cwiseMax(0.0);
  const double total = c.sum();
  if (!(total > 0.0)) {
    return SimplexWeights::uniform(m.size());
  }
  return SimplexWeights(c / total);
}

}  // namespace

KalmanConfig KalmanConfig::from_dpm(Eigen::Index n, const DpmParams& params) {
  params.validate();
  KalmanConfig cfg;
  cfg.q = zero_sum_covariance(n, params.alpha);
  cfg.sigma0 = zero_sum_covariance(n, params.alpha0);
  cfg.mu0 = SimplexWeights::uniform(n).values();
  cfg.sigma_eps_sq = params.sigma_eps_sq;
  cfg.alpha = params.alpha;
  return cfg;
}

void KalmanConfig::validate() const {
  const Eigen::Index n = mu0.size();
  if (n < 1 || q.rows() != n || sigma0.rows() != n) {
    throw std::invalid_argument("KalmanConfig: shape mismatch between mu0, Q and Sigma0");
  }
  if (!is_symmetric_psd(q, 1e-10) || !is_symmetric_psd(sigma0, 1e-10)) {
    throw std::invalid_argument("KalmanConfig: Q and Sigma0 must be symmetric PSD");
  }
  if (std::abs(mu0.sum() - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("KalmanConfig: mu0 must sum to 1");
  }
  if (!(sigma_eps_sq > 0.0)) {
    throw std::invalid_argument("KalmanConfig: sigma_eps_sq must be > 0");
  }
}

Eigen::MatrixXd spherical_covariance(Eigen::Index n, double alpha) {
  if (n < 2) {
    throw std::invalid_argument("spherical_covariance: n must be >= 2");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("spherical_covariance: alpha must be > 0");
  }
  const double nn = static_cast<double>(n);
  const double v = (1.0 / nn) * (1.0 - 1.0 / nn) / (alpha + 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, -v / (nn - 1.0));
  m.diagonal().setConstant(v);
  return m;
}

Eigen::MatrixXd project_covariance(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) {
    throw std::invalid_argument("project_covariance: matrix must be square");
  }
  const Eigen::VectorXd s1 = sigma.rowwise().sum();
  if (s1.cwiseAbs().maxCoeff() <= 1e-12) {
    return sigma;
  }
  const double mass = s1.sum();
  if (mass <= kDegenerateMass) {
    throw std::invalid_argument(
        "project_covariance: 1'S1 is numerically zero but S1 != 0");
  }
  return symmetrize(sigma - s1 * s1.transpose() / mass);
}

ProjectedState project_state(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw std::invalid_argument("project_state: shape mismatch");
  }
  const Eigen::VectorXd s1 = sigma.rowwise().sum();
  const double mass = s1.sum();
  const double excess = mu.sum() - 1.0;
  if (mass <= kDegenerateMass) {
    // Sigma already carries no mass off the constraint surface; that is
    // only consistent with a mean that is already on it.
    if (std::abs(excess) <= 1e-12 && s1.cwiseAbs().maxCoeff() <= 1e-12) {
      return {mu, sigma};
    }
    throw std::invalid_argument("project_state: 1'S1 is numerically zero");
  }
  const Eigen::VectorXd gain = s1 / mass;
  ProjectedState out;
  out.mean = mu - gain * excess;
  out.cov = symmetrize(sigma - gain * s1.transpose());
  return out;
}

GaussianBelief kalman_update(const GaussianBelief& belief, const Eigen::VectorXd& r_pa,
                             double r_hf, double sigma_eps_sq) {
  if (r_pa.size() != belief.mean.size()) {
    throw std::invalid_argument("kalman_update: return vector size mismatch");
  }
  if (!(sigma_eps_sq > 0.0)) {
    throw std::invalid_argument("kalman_update: sigma_eps_sq must be > 0");
  }
  const Eigen::VectorXd sr = belief.cov * r_pa;
  const double innovation_var = r_pa.dot(sr) + sigma_eps_sq;
  const Eigen::VectorXd gain = sr / innovation_var;
  GaussianBelief out;
  out.mean = belief.mean + gain * (r_hf - belief.mean.dot(r_pa));
  out.cov = symmetrize(belief.cov - gain * sr.transpose());
  return out;
}

GaussianPath cndpm_path(const ReturnPanel& panel, double alpha, double sigma_eps_sq,
                        const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                        bool scaled_covariance) {
  panel.validate();
  const Eigen::Index n = panel.assets();
  if (!(alpha > 0.0) || !(sigma_eps_sq > 0.0)) {
    throw std::invalid_argument("cndpm_filter: alpha and sigma_eps_sq must be > 0");
  }
  if (mu0.size() != n || sigma0.rows() != n || sigma0.cols() != n) {
    throw std::invalid_argument("cndpm_filter: initial belief does not match the panel");
  }
  GaussianPath path;
  GaussianBelief belief{mu0, sigma0};
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    if (t > 0) {
      const Eigen::VectorXd r_prev = panel.palette.row(t - 1).transpose();
      const Eigen::VectorXd m = drift(belief.mean, r_prev);
      Eigen::MatrixXd transition = dirichlet_moments(clamp_to_simplex(m), alpha).cov;
      if (scaled_covariance) {
        const double xi = belief.mean.dot(Eigen::VectorXd::Ones(n) + r_prev);
        transition *= xi;
      }
      belief.mean = m;
      belief.cov = symmetrize(belief.cov + transition);
    }
    path.prior.push_back(belief);
    belief = kalman_update(belief, panel.palette.row(t).transpose(), panel.fund[t],
                           sigma_eps_sq);
    path.posterior.push_back(belief);
  }
  return path;
}

WeightTrajectory cndpm_filter(const ReturnPanel& panel, double alpha,
                              double sigma_eps_sq, const Eigen::VectorXd& mu0,
                              const Eigen::MatrixXd& sigma0, const CndpmOptions& options) {
  const GaussianPath path =
      cndpm_path(panel, alpha, sigma_eps_sq, mu0, sigma0, options.scaled_covariance);
  return summarize(panel, path, "cndpm", options.band_prob);
}

WeightTrajectory cndpm_filter(const ReturnPanel& panel, const DpmParams& params,
                              const CndpmOptions& options) {
  params.validate();
  const Eigen::Index n = panel.assets();
  return cndpm_filter(panel, params.alpha, params.sigma_eps_sq,
                      SimplexWeights::uniform(n).values(),
                      zero_sum_covariance(n, params.alpha0), options);
}

GaussianPath constrained_kalman_path(const ReturnPanel& panel, const KalmanConfig& cfg,
                                     ConstraintMethod method) {
  panel.validate();
  cfg.validate();
  if (cfg.mu0.size() != panel.assets()) {
    throw std::invalid_argument("constrained_kalman_filter: config does not match the panel");
  }
  if (method == ConstraintMethod::covariance_restricted &&
      (row_sum_residual(cfg.q) > 1e-10 || row_sum_residual(cfg.sigma0) > 1e-10)) {
    throw std::invalid_argument(
        "constrained_kalman_filter: the restricted-covariance method needs Q1 = 0 and "
        "Sigma0 1 = 0; build them with spherical_covariance or project_covariance");
  }
  GaussianPath path;
  GaussianBelief belief{cfg.mu0, cfg.sigma0};
  for (Eigen::Index t = 0; t < panel.periods(); ++t) {
    if (t > 0) {
      belief.mean = drift(belief.mean, panel.palette.row(t - 1).transpose());
      belief.cov = symmetrize(belief.cov + cfg.q);
    }
    path.prior.push_back(belief);
    belief = kalman_update(belief, panel.palette.row(t).transpose(), panel.fund[t],
                           cfg.sigma_eps_sq);
    if (method == ConstraintMethod::state_projection) {
      ProjectedState projected = project_state(belief.mean, belief.cov);
      belief.mean = std::move(projected.mean);
      belief.cov = std::move(projected.cov);
    }
    path.posterior.push_back(belief);
  }
  return path;
}

WeightTrajectory constrained_kalman_filter(const ReturnPanel& panel,
                                           const KalmanConfig& cfg,
                                           ConstraintMethod method, double band_prob) {
  const GaussianPath path = constrained_kalman_path(panel, cfg, method);
  return summarize(panel, path,
                   method == ConstraintMethod::covariance_restricted ? "ckalcov" : "ckalproj",
                   band_prob);
}

}  // namespace dpm
