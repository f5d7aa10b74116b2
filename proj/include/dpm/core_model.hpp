#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dpm/random.hpp"

namespace dpm {

inline constexpr double kSimplexTolerance = 1e-9;

// A point on the probability simplex: non-negative weights summing to one.
// Inputs whose sum is off by at most kSimplexTolerance are renormalized;
// anything further away is rejected.
class SimplexWeights {
 public:
  explicit SimplexWeights(Eigen::VectorXd w);

  static SimplexWeights uniform(Eigen::Index n);

  const Eigen::VectorXd& values() const { return w_; }
  Eigen::Index size() const { return w_.size(); }
  double operator[](Eigen::Index i) const { return w_[i]; }

  // True when `w` would be accepted by the constructor.
  static bool is_valid(const Eigen::VectorXd& w,
                       double tolerance = kSimplexTolerance);

 private:
  Eigen::VectorXd w_;
};

// Dated T x n panel of palette returns plus the fund return column.
// All returns are simple decimal returns (0.01 == 1%).
struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> asset_names;
  std::string fund_name = "fund";
  Eigen::MatrixXd palette;  // T x n
  Eigen::VectorXd fund;     // T

  Eigen::Index periods() const { return palette.rows(); }
  Eigen::Index assets() const { return palette.cols(); }

  // Throws std::invalid_argument (shape/order) or std::domain_error
  // (a return at or below -100%).
  void validate() const;

  // Rows [first, first + count).
  ReturnPanel slice(Eigen::Index first, Eigen::Index count) const;
};

struct DpmParams {
  double alpha = 1600.0;
  double alpha0 = 100.0;
  double sigma_eps_sq = 0.01;
  double nu = 6.0;
  bool gaussian_obs = false;

  void validate() const;
};

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  void validate() const;
};

struct DirichletMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Capital-appreciation drift: (w o (1 + r)) / sum_i w_i (1 + r_i).
// The vector overload accepts any weight vector (negative entries included)
// as long as the gross portfolio value stays positive; the analytic filters
// need that since their means are not confined to the simplex.
Eigen::VectorXd drift(const Eigen::VectorXd& w, const Eigen::VectorXd& r_prev);
SimplexWeights drift(const SimplexWeights& w, const Eigen::VectorXd& r_prev);

inline constexpr double kConcentrationFloor = 1e-12;

// One Dir(alpha * mean) draw via normalized Gamma variates. Concentration
// components are floored at kConcentrationFloor.
SimplexWeights sample_dirichlet(const SimplexWeights& mean, double alpha,
                                Rng& rng);

// In-place variant used by the particle filter: `out` receives a draw from
// Dir(alpha * mean). `mean` and `out` may alias.
void sample_dirichlet_into(const Eigen::Ref<const Eigen::VectorXd>& mean,
                           double alpha, Rng& rng, Eigen::Ref<Eigen::VectorXd> out);

// Exact Dirichlet mean and covariance: Cov_ij = m_i (d_ij - m_j) / (alpha + 1).
DirichletMoments dirichlet_moments(const SimplexWeights& mean, double alpha);

double student_t_logpdf(double x, double loc, double sigma_sq, double nu);
double normal_logpdf(double x, double loc, double sigma_sq);

// Observation density of the fund return given the portfolio-implied return,
// with the normalizing constant hoisted out of the per-particle loop.
class ObservationKernel {
 public:
  explicit ObservationKernel(const DpmParams& params);

  // log p(r_hf | w' r_pa) as a function of the residual r_hf - w' r_pa.
  double log_density(double residual) const {
    const double z = residual * residual;
    return gaussian_ ? log_const_ - z * half_inv_var_
                     : log_const_ - exponent_ * std::log1p(z * inv_nu_var_);
  }

 private:
  bool gaussian_;
  double log_const_;
  double half_inv_var_ = 0.0;
  double inv_nu_var_ = 0.0;
  double exponent_ = 0.0;
};

}  // namespace dpm
