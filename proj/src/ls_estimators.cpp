#include "dpm/ls_estimators.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dpm {

namespace {

struct NormalSystem {
  Eigen::MatrixXd a;  // X'X
  Eigen::VectorXd b;  // X'y
  Eigen::LLT<Eigen::MatrixXd> llt;
};

NormalSystem make_system(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("least squares: X rows and y length differ");
  }
  if (x.cols() < 1) {
    throw std::invalid_argument("least squares: need at least one column");
  }
  NormalSystem sys;
  sys.a = x.transpose() * x;
  sys.b = x.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.a, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxNormalCondition)) {
    std::ostringstream os;
    os << "least squares: X'X is singular or ill-conditioned (condition number "
       << cond << " exceeds " << kMaxNormalCondition << ")";
    throw std::runtime_error(os.str());
  }
  sys.llt.compute(sys.a);
  return sys;
}

// Minimizer of 0.5 w'Aw - b'w subject to 1'w = 1, restricted to the index
// set `free` (other components fixed at zero).
Eigen::VectorXd solve_budget_subproblem(const NormalSystem& sys,
                                        const std::vector<Eigen::Index>& free) {
  const auto m = static_cast<Eigen::Index>(free.size());
  const Eigen::Index n = sys.a.rows();
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    b[i] = sys.b[free[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < m; ++j) {
      a(i, j) = sys.a(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  const Eigen::VectorXd w_hat = llt.solve(b);
  const Eigen::VectorXd u = llt.solve(Eigen::VectorXd::Ones(m));
  const Eigen::VectorXd w_free = w_hat - u * ((w_hat.sum() - 1.0) / u.sum());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) w[free[static_cast<std::size_t>(i)]] = w_free[i];
  return w;
}

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double candidate = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace

void WindowConfig::validate(Eigen::Index assets) const {
  if (k < assets + 1) {
    throw std::invalid_argument("WindowConfig: window length k must be >= n + 1");
  }
  if (step < 1) {
    throw std::invalid_argument("WindowConfig: step must be >= 1");
  }
}

Eigen::VectorXd cls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const NormalSystem sys = make_system(x, y);
  const Eigen::VectorXd w_hat = sys.llt.solve(sys.b);
  const Eigen::VectorXd u = sys.llt.solve(Eigen::VectorXd::Ones(x.cols()));
  return w_hat - u * ((w_hat.sum() - 1.0) / u.sum());
}

Eigen::MatrixXd cls_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w) {
  const NormalSystem sys = make_system(x, y);
  const Eigen::Index dof = x.rows() - x.cols() + 1;
  const double s2 = dof > 0 ? (y - x * w).squaredNorm() / static_cast<double>(dof)
                            : std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd a_inv = sys.llt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  const Eigen::VectorXd u = a_inv.rowwise().sum();
  return s2 * (a_inv - u * u.transpose() / u.sum());
}

Eigen::VectorXd icls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const NormalSystem sys = make_system(x, y);
  const Eigen::Index n = x.cols();
  {
    const Eigen::VectorXd u = sys.llt.solve(Eigen::VectorXd::Ones(n));
    const Eigen::VectorXd w_hat = sys.llt.solve(sys.b);
    const Eigen::VectorXd cls = w_hat - u * ((w_hat.sum() - 1.0) / u.sum());
    if (cls.minCoeff() >= 0.0) return cls;
  }

  // Feasible start: simplex projection of the CLS solution.
  const std::vector<Eigen::Index> all = [n] {
    std::vector<Eigen::Index> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
  }();
  Eigen::VectorXd w = project_to_simplex(solve_budget_subproblem(sys, all));
  std::vector<bool> clamped(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) clamped[static_cast<std::size_t>(i)] = (w[i] == 0.0);

  const double scale = std::max(1.0, sys.a.cwiseAbs().maxCoeff() + sys.b.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * scale;
  const Eigen::Index max_iter = 100 * n;
  for (Eigen::Index iter = 0; iter < max_iter; ++iter) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!clamped[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    const Eigen::VectorXd target = solve_budget_subproblem(sys, free);
    const Eigen::VectorXd step = target - w;

    if (step.cwiseAbs().maxCoeff() <= 1e-14) {
      // Stationary on the working set: check the multipliers of the
      // clamped components.
      const Eigen::VectorXd grad = sys.a * w - sys.b;
      double nu = 0.0;
      for (Eigen::Index i : free) nu -= grad[i];
      nu /= static_cast<double>(free.size());
      Eigen::Index release = -1;
      double most_negative = -tol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!clamped[static_cast<std::size_t>(i)]) continue;
        const double multiplier = grad[i] + nu;
        if (multiplier < most_negative) {
          most_negative = multiplier;
          release = i;
        }
      }
      if (release < 0) return w;
      clamped[static_cast<std::size_t>(release)] = false;
      continue;
    }

    double length = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : free) {
      if (step[i] < 0.0) {
        const double ratio = -w[i] / step[i];
        if (ratio < length) {
          length = ratio;
          blocking = i;
        }
      }
    }
    w += length * step;
    if (blocking >= 0) {
      w[blocking] = 0.0;
      clamped[static_cast<std::size_t>(blocking)] = true;
    }
    w = w.cwiseMax(0.0);
  }
  throw std::runtime_error("icls_fit: active-set solver did not converge in 100 n iterations");
}

WeightTrajectory rolling_fit(const ReturnPanel& panel, const WindowConfig& cfg,
                             LsMethod method, double band_prob) {
  panel.validate();
  const Eigen::Index n = panel.assets();
  const Eigen::Index periods = panel.periods();
  cfg.validate(n);
  if (periods <= cfg.k) {
    throw std::invalid_argument("rolling_fit: need more periods than the window length");
  }
  if (!(band_prob > 0.0 && band_prob < 1.0)) {
    throw std::invalid_argument("rolling_fit: band probability must be in (0, 1)");
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * band_prob);
  const bool with_bands = method == LsMethod::cls;
  auto fit = [&](Eigen::Index first) {
    const Eigen::MatrixXd x = panel.palette.middleRows(first, cfg.k);
    const Eigen::VectorXd y = panel.fund.segment(first, cfg.k);
    return method == LsMethod::cls ? cls_fit(x, y) : icls_fit(x, y);
  };

  const Eigen::Index rows = periods - cfg.k;
  WeightTrajectory traj;
  traj.method = method == LsMethod::cls ? "cls" : "icls";
  traj.resize(rows, n);
  traj.asset_names = panel.asset_names;
  traj.has_bands = with_bands;
  traj.band_prob = band_prob;
  traj.first_period = cfg.k;

  Eigen::VectorXd previous = fit(0);
  Eigen::VectorXd band_sd = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const Eigen::Index t = cfg.k + j;
    Eigen::VectorXd current = previous;
    if (j % cfg.step == 0) {
      current = fit(t - cfg.k + 1);
      if (with_bands) {
        const Eigen::Index first = t - cfg.k + 1;
        band_sd = cls_covariance(panel.palette.middleRows(first, cfg.k),
                                 panel.fund.segment(first, cfg.k), current)
                      .diagonal()
                      .cwiseMax(0.0)
                      .cwiseSqrt();
      }
    }
    const Eigen::VectorXd r = panel.palette.row(t).transpose();
    traj.dates[static_cast<std::size_t>(j)] = panel.dates[static_cast<std::size_t>(t)];
    traj.prior_mean.row(j) = previous.transpose();
    traj.posterior_mean.row(j) = current.transpose();
    if (with_bands) {
      traj.lower.row(j) = (current - z * band_sd).transpose();
      traj.upper.row(j) = (current + z * band_sd).transpose();
    } else {
      traj.lower.row(j).setConstant(std::numeric_limits<double>::quiet_NaN());
      traj.upper.row(j).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    traj.forecast_return[j] = previous.dot(r);
    traj.fitted_return[j] = current.dot(r);
    traj.actual_return[j] = panel.fund[t];
    previous = current;
  }
  return traj;
}

}  // namespace dpm
