#include "dpm/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dpm {

namespace {

std::string describe(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << (i ? ", " : "") << v[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

SimplexWeights::SimplexWeights(Eigen::VectorXd w) : w_(std::move(w)) {
  if (w_.size() < 1) {
    throw std::invalid_argument("SimplexWeights: need at least one component");
  }
  if (!w_.allFinite()) {
    throw std::invalid_argument("SimplexWeights: non-finite component in " +
                                describe(w_));
  }
  if (w_.minCoeff() < 0.0) {
    throw std::invalid_argument("SimplexWeights: negative component in " +
                                describe(w_));
  }
  const double sum = w_.sum();
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os << "SimplexWeights: components sum to " << sum << ", not 1";
    throw std::invalid_argument(os.str());
  }
  w_ /= sum;
}

SimplexWeights SimplexWeights::uniform(Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("SimplexWeights::uniform: n must be >= 1");
  }
  return SimplexWeights(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

bool SimplexWeights::is_valid(const Eigen::VectorXd& w, double tolerance) {
  return w.size() >= 1 && w.allFinite() && w.minCoeff() >= 0.0 &&
         std::abs(w.sum() - 1.0) <= tolerance;
}

void ReturnPanel::validate() const {
  const Eigen::Index t = palette.rows();
  const Eigen::Index n = palette.cols();
  if (t < 1 || n < 1) {
    throw std::invalid_argument("ReturnPanel: need T >= 1 and n >= 1");
  }
  if (fund.size() != t || static_cast<Eigen::Index>(dates.size()) != t) {
    throw std::invalid_argument(
        "ReturnPanel: dates, palette rows and fund length must agree");
  }
  if (!asset_names.empty() && static_cast<Eigen::Index>(asset_names.size()) != n) {
    throw std::invalid_argument("ReturnPanel: one asset name per palette column");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw std::invalid_argument("ReturnPanel: dates not strictly increasing at '" +
                                  dates[i] + "'");
    }
  }
  if (!palette.allFinite() || !fund.allFinite()) {
    throw std::invalid_argument("ReturnPanel: non-finite return");
  }
  if (palette.minCoeff() <= -1.0) {
    throw std::domain_error("ReturnPanel: palette return <= -100%");
  }
}

ReturnPanel ReturnPanel::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > periods()) {
    throw std::out_of_range("ReturnPanel::slice: range outside the panel");
  }
  ReturnPanel out;
  out.dates.assign(dates.begin() + first, dates.begin() + first + count);
  out.asset_names = asset_names;
  out.fund_name = fund_name;
  out.palette = palette.middleRows(first, count);
  out.fund = fund.segment(first, count);
  return out;
}

void DpmParams::validate() const {
  if (!(alpha > 0.0) || !(alpha0 > 0.0) || !(sigma_eps_sq > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument(
        "DpmParams: alpha, alpha0, sigma_eps_sq and nu must be strictly positive");
  }
}

void GaussianBelief::validate() const {
  const Eigen::Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) {
    throw std::invalid_argument("GaussianBelief: covariance shape mismatch");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("GaussianBelief: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("GaussianBelief: covariance not PSD");
  }
}

Eigen::VectorXd drift(const Eigen::VectorXd& w, const Eigen::VectorXd& r_prev) {
  if (w.size() != r_prev.size()) {
    throw std::invalid_argument("drift: weight and return sizes differ");
  }
  if (r_prev.size() > 0 && r_prev.minCoeff() <= -1.0) {
    throw std::domain_error("drift: return <= -100% makes the drift undefined");
  }
  Eigen::VectorXd grown = w.cwiseProduct(Eigen::VectorXd::Ones(w.size()) + r_prev);
  const double total = grown.sum();
  if (!(total > 0.0)) {
    throw std::domain_error("drift: non-positive gross portfolio value");
  }
  return grown / total;
}

SimplexWeights drift(const SimplexWeights& w, const Eigen::VectorXd& r_prev) {
  return SimplexWeights(drift(w.values(), r_prev));
}

void sample_dirichlet_into(const Eigen::Ref<const Eigen::VectorXd>& mean,
                           double alpha, Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = mean.size();
  if (n == 1) {
    out[0] = 1.0;
    return;
  }
  // Copy the concentrations first so that `out` may alias `mean`.
  thread_local Eigen::VectorXd shape;
  shape = (alpha * mean).cwiseMax(kConcentrationFloor);
  std::gamma_distribution<double> gamma;
  using Param = std::gamma_distribution<double>::param_type;
  for (int attempt = 0; attempt < 100; ++attempt) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      out[i] = gamma(rng, Param(shape[i], 1.0));
      sum += out[i];
    }
    if (sum > 0.0 && std::isfinite(sum)) {
      out /= sum;
      return;
    }
  }
  throw std::runtime_error(
      "sample_dirichlet: every Gamma variate underflowed in 100 attempts");
}

SimplexWeights sample_dirichlet(const SimplexWeights& mean, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("sample_dirichlet: alpha must be > 0");
  }
  Eigen::VectorXd out(mean.size());
  sample_dirichlet_into(mean.values(), alpha, rng, out);
  return SimplexWeights(std::move(out));
}

DirichletMoments dirichlet_moments(const SimplexWeights& mean, double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("dirichlet_moments: alpha must be > 0");
  }
  const Eigen::VectorXd& m = mean.values();
  Eigen::MatrixXd cov = -m * m.transpose();
  cov.diagonal() += m;
  cov /= (alpha + 1.0);
  return {m, cov};
}

double student_t_logpdf(double x, double loc, double sigma_sq, double nu) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("student_t_logpdf: non-finite argument");
  }
  if (!(sigma_sq > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument("student_t_logpdf: sigma_sq and nu must be > 0");
  }
  const double z = (x - loc) * (x - loc) / (nu * sigma_sq);
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(std::numbers::pi * nu * sigma_sq) -
         0.5 * (nu + 1.0) * std::log1p(z);
}

double normal_logpdf(double x, double loc, double sigma_sq) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("normal_logpdf: non-finite argument");
  }
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("normal_logpdf: sigma_sq must be > 0");
  }
  const double d = x - loc;
  return -0.5 * std::log(2.0 * std::numbers::pi * sigma_sq) - 0.5 * d * d / sigma_sq;
}

ObservationKernel::ObservationKernel(const DpmParams& params)
    : gaussian_(params.gaussian_obs) {
  params.validate();
  if (gaussian_) {
    log_const_ = -0.5 * std::log(2.0 * std::numbers::pi * params.sigma_eps_sq);
    half_inv_var_ = 0.5 / params.sigma_eps_sq;
  } else {
    const double nu = params.nu;
    log_const_ = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                 0.5 * std::log(std::numbers::pi * nu * params.sigma_eps_sq);
    inv_nu_var_ = 1.0 / (nu * params.sigma_eps_sq);
    exponent_ = 0.5 * (nu + 1.0);
  }
}

}  // namespace dpm
