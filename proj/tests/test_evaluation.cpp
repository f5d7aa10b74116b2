#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dpm/evaluation.hpp"
#include "dpm/gaussian_estimators.hpp"
#include "dpm/ls_estimators.hpp"
#include "dpm/random.hpp"
#include "dpm/smc_estimator.hpp"
#include "dpm/study.hpp"
#include "test_support.hpp"

namespace dpm {
namespace {

using testing::make_panel;
using testing::simulated;
using testing::vec;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double mean = 0.005, double sd = 0.04) {
  std::normal_distribution<double> z(mean, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

TEST(ForecastMetrics, PerfectForecast) {
  const Eigen::VectorXd a = vec({0.01, -0.02, 0.03, 0.005});
  const ForecastReport r = forecast_metrics(a, a);
  EXPECT_EQ(r.f_rmse, 0.0);
  EXPECT_EQ(r.f_mae, 0.0);
  ASSERT_TRUE(r.f_corr && r.f_r2);
  EXPECT_NEAR(*r.f_corr, 1.0, 1e-15);
  EXPECT_EQ(*r.f_r2, 1.0);
}

TEST(ForecastMetrics, MeanForecastHasZeroR2) {
  const Eigen::VectorXd a = vec({0.01, -0.02, 0.03, 0.005});
  const ForecastReport r = forecast_metrics(a, Eigen::VectorXd::Constant(4, a.mean()));
  ASSERT_TRUE(r.f_r2);
  EXPECT_NEAR(*r.f_r2, 0.0, 1e-15);
  EXPECT_FALSE(r.f_corr);  // constant forecast
}

TEST(ForecastMetrics, HandExample) {
  const ForecastReport r = forecast_metrics(vec({0.01, -0.02, 0.03}), vec({0.00, -0.01, 0.02}));
  EXPECT_NEAR(r.f_mae, 0.01, 1e-15);
  EXPECT_NEAR(r.f_rmse, 0.01, 1e-15);
  // Residual sum of squares 3e-4; total sum of squares 0.0038 / 3.
  ASSERT_TRUE(r.f_r2);
  EXPECT_NEAR(*r.f_r2, 1.0 - 0.0003 / (0.0038 / 3.0), 1e-12);
  EXPECT_NEAR(*r.f_r2, 0.7619, 2e-3);
  EXPECT_NEAR(r.mean, 0.01 / 3.0, 1e-15);
}

TEST(ForecastMetrics, ConstantActualLeavesFitUndefined) {
  const ForecastReport r = forecast_metrics(Eigen::VectorXd::Constant(5, 0.01), vec({0.0, 0.01, 0.02, 0.0, 0.01}));
  EXPECT_FALSE(r.f_r2);
  EXPECT_FALSE(r.f_corr);
  EXPECT_GT(r.f_rmse, 0.0);
}

TEST(ForecastMetrics, RejectsBadInput) {
  EXPECT_THROW(forecast_metrics(vec({0.1, 0.2}), vec({0.1})), std::invalid_argument);
  EXPECT_THROW(forecast_metrics(vec({0.1}), vec({0.1})), std::invalid_argument);
}

TEST(ForecastMetrics, PropertiesOnRandomSeries) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::VectorXd a = random_matrix(40, 1, rng);
    const Eigen::VectorXd f = a + random_matrix(40, 1, rng, 0.0, 0.02);
    const ForecastReport r = forecast_metrics(a, f);
    EXPECT_GE(r.f_mae, 0.0);
    EXPECT_LE(r.f_mae, r.f_rmse + 1e-15);
    ASSERT_TRUE(r.f_corr && r.f_r2);
    EXPECT_LE(std::abs(*r.f_corr), 1.0);
    EXPECT_LE(*r.f_r2, 1.0);

    const ForecastReport shifted = forecast_metrics(a.array() + 0.3, f.array() + 0.3);
    EXPECT_NEAR(shifted.f_rmse, r.f_rmse, 1e-12);
    EXPECT_NEAR(shifted.f_mae, r.f_mae, 1e-12);
    EXPECT_NEAR(*shifted.f_corr, *r.f_corr, 1e-9);
  }
}

TEST(WeightMae, IdenticalAndOffsetInputs) {
  Rng rng(2);
  const Eigen::MatrixXd w = random_matrix(20, 3, rng);
  EXPECT_EQ(weight_mae(w, w).overall, 0.0);
  Eigen::MatrixXd shifted = w;
  shifted.col(0).array() += 0.02;
  shifted.col(2).array() -= 0.02;
  const WeightError e = weight_mae(w, shifted);
  EXPECT_NEAR(e.per_asset[0], 0.02, 1e-15);
  EXPECT_NEAR(e.per_asset[1], 0.0, 1e-15);
  EXPECT_NEAR(e.per_asset[2], 0.02, 1e-15);
  EXPECT_NEAR(e.overall, 0.04 / 3.0, 1e-15);
}

TEST(WeightMae, MatchesNaiveLoop) {
  Rng rng(3);
  const Eigen::MatrixXd a = random_matrix(17, 4, rng);
  const Eigen::MatrixXd b = random_matrix(17, 4, rng);
  double overall = 0.0;
  const WeightError e = weight_mae(a, b);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double sum = 0.0;
    for (Eigen::Index t = 0; t < 17; ++t) sum += std::abs(a(t, j) - b(t, j));
    EXPECT_NEAR(e.per_asset[j], sum / 17.0, 1e-15);
    overall += sum / 17.0;
  }
  EXPECT_NEAR(e.overall, overall / 4.0, 1e-15);
  EXPECT_THROW(weight_mae(a, b.leftCols(3)), std::invalid_argument);
}

TEST(ReplicationWeights, ReturnsMatchForecastSeries) {
  const SimulatedPanel sim = simulated(4, 60, 1600.0, 1e-3, 5);
  DpmParams params;
  params.sigma_eps_sq = 1e-3;
  DpmOptions options;
  options.particles = 2000;
  const std::vector<WeightTrajectory> trajectories = {
      filter_dpm(sim.panel, params, options), cndpm_filter(sim.panel, params),
      rolling_fit(sim.panel, WindowConfig{12, 1}, LsMethod::icls)};
  for (const WeightTrajectory& traj : trajectories) {
    const Eigen::MatrixXd w = replication_weights(traj, sim.panel);
    const Eigen::VectorXd r = replication_returns(w, sim.panel, traj.first_period);
    EXPECT_EQ(r, traj.forecast_return) << traj.method;
  }
}

TEST(ReplicationWeights, ZeroReturnsKeepPosteriorMeans) {
  Eigen::MatrixXd palette = Eigen::MatrixXd::Zero(10, 3);
  const ReturnPanel panel = make_panel(palette, Eigen::VectorXd::Constant(10, 0.01));
  DpmParams params;
  const WeightTrajectory traj = cndpm_filter(panel, params);
  const Eigen::MatrixXd w = replication_weights(traj, panel);
  for (Eigen::Index t = 1; t < 10; ++t) {
    EXPECT_LE((w.row(t) - traj.posterior_mean.row(t - 1)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ReplicationWeights, MisalignmentThrows) {
  const SimulatedPanel sim = simulated(3, 40, 1600.0, 1e-3, 6);
  DpmParams params;
  WeightTrajectory traj = cndpm_filter(sim.panel, params);
  traj.dates[5] = "1999-01-01";
  EXPECT_THROW(replication_weights(traj, sim.panel), std::invalid_argument);
  const ReturnPanel shorter = sim.panel.slice(0, 30);
  EXPECT_THROW(replication_weights(cndpm_filter(sim.panel, params), shorter), std::invalid_argument);
}

TEST(ReplicationWeights, TracksSimulatedFund) {
  // Low-noise Dirichlet fund; see the noise-level note in the README.
  const SimulatedPanel sim = simulated(6, 120, 1600.0, 2e-5, 7);
  DpmParams params;
  params.sigma_eps_sq = 2e-5;
  const WeightTrajectory traj = filter_dpm(sim.panel, params, DpmOptions{});
  const Eigen::VectorXd r =
      replication_returns(replication_weights(traj, sim.panel), sim.panel, 0);
  const ForecastReport report = forecast_metrics(sim.panel.fund, r);
  ASSERT_TRUE(report.f_r2);
  EXPECT_GE(*report.f_r2, 0.9);
}

TEST(AdjustFees, HandExamples) {
  const Eigen::VectorXd out = adjust_fees(vec({0.02, -0.01}));
  EXPECT_NEAR(out[0], 0.016875, 1e-15);
  EXPECT_NEAR(out[1], -0.01125, 1e-15);
  const Eigen::VectorXd r = vec({0.02, -0.01, 0.0});
  EXPECT_EQ(adjust_fees(r, FeeSchedule{0.0, 0.0, 12}), r);
}

TEST(AdjustFees, NeverIncreasesReturns) {
  Rng rng(8);
  const Eigen::VectorXd r = random_matrix(500, 1, rng);
  const Eigen::VectorXd out = adjust_fees(r, FeeSchedule{0.02, 0.2, 252});
  EXPECT_TRUE((out.array() <= r.array()).all());
  EXPECT_THROW(adjust_fees(r, FeeSchedule{1.0, 0.1, 12}), std::invalid_argument);
  EXPECT_THROW(adjust_fees(r, FeeSchedule{0.01, -0.1, 12}), std::invalid_argument);
}

TEST(CumulativeWealth, Compounds) {
  const Eigen::VectorXd w = cumulative_wealth(vec({0.1, -0.1}));
  ASSERT_EQ(w.size(), 3);
  EXPECT_NEAR(w[0], 1.0, 1e-15);
  EXPECT_NEAR(w[1], 1.1, 1e-15);
  EXPECT_NEAR(w[2], 0.99, 1e-15);
  EXPECT_EQ(cumulative_wealth(Eigen::VectorXd::Zero(4)), Eigen::VectorXd::Ones(5));
  EXPECT_NEAR(cumulative_wealth(vec({0.25}))[1], 1.25, 1e-15);
  EXPECT_THROW(cumulative_wealth(vec({0.1, -1.0})), std::domain_error);
}

TEST(IntraperiodEstimate, HandExamples) {
  Eigen::MatrixXd cov(2, 2);
  cov << 0.04, 0.0, 0.0, 0.01;
  const IntraperiodEstimate e =
      intraperiod_estimate(SimplexWeights(vec({0.5, 0.5})), vec({0.01, 0.03}), cov, 0.0);
  EXPECT_NEAR(e.volatility, std::sqrt(0.0125), 1e-15);
  EXPECT_NEAR(e.expected_return, 0.02, 1e-15);

  const IntraperiodEstimate flat = intraperiod_estimate(
      SimplexWeights(vec({0.2, 0.3, 0.5})), Eigen::VectorXd::Constant(3, 0.004),
      Eigen::MatrixXd::Zero(3, 3), 0.0009);
  EXPECT_NEAR(flat.expected_return, 0.004, 1e-15);
  EXPECT_NEAR(flat.volatility, 0.03, 1e-15);
}

TEST(IntraperiodEstimate, VolatilityFloorAndPsdCheck) {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd a = random_matrix(3, 3, rng);
    const IntraperiodEstimate e = intraperiod_estimate(
        SimplexWeights::uniform(3), Eigen::VectorXd::Zero(3), a * a.transpose(), 0.01);
    EXPECT_GE(e.volatility, 0.1 - 1e-15);
  }
  Eigen::MatrixXd bad(2, 2);
  bad << 0.01, 0.05, 0.05, 0.01;
  EXPECT_THROW(intraperiod_estimate(SimplexWeights::uniform(2), vec({0.0, 0.0}), bad, 0.0),
               std::invalid_argument);
}

TEST(EwmaCovariance, ConstantReturnsGiveZero) {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(30, 3, 0.01);
  EXPECT_LE(ewma_covariance(r).cwiseAbs().maxCoeff(), 1e-18);
}

TEST(EwmaCovariance, UnitDecayLimitIsSampleCovariance) {
  // Daily-scale returns, the input the intraperiod estimate feeds it. The
  // gap to the sample covariance is O(T (1 - lambda)) relative to the
  // variance, so the absolute bound depends on the return scale.
  Rng rng(10);
  const Eigen::MatrixXd r = random_matrix(50, 3, rng, 0.0005, 0.012);
  const Eigen::MatrixXd centered = r.rowwise() - r.colwise().mean();
  const Eigen::MatrixXd sample = centered.transpose() * centered / 49.0;
  EXPECT_LE((ewma_covariance(r, 0.999999) - sample).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EwmaCovariance, TwoPeriodDirectComputation) {
  Eigen::MatrixXd r(2, 2);
  r << 0.01, 0.03, -0.02, 0.05;
  const double lambda = 0.5;
  // Weights lambda and 1 normalized: (1/3, 2/3).
  const double w0 = 1.0 / 3.0;
  const double w1 = 2.0 / 3.0;
  const Eigen::RowVectorXd mean = w0 * r.row(0) + w1 * r.row(1);
  const Eigen::RowVectorXd d0 = r.row(0) - mean;
  const Eigen::RowVectorXd d1 = r.row(1) - mean;
  const Eigen::MatrixXd expected =
      (w0 * d0.transpose() * d0 + w1 * d1.transpose() * d1) / (1.0 - w0 * w0 - w1 * w1);
  EXPECT_LE((ewma_covariance(r, lambda) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EwmaCovariance, PsdAndValidated) {
  Rng rng(11);
  const Eigen::MatrixXd c = ewma_covariance(random_matrix(40, 5, rng));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-15);
  EXPECT_THROW(ewma_covariance(random_matrix(1, 2, rng)), std::invalid_argument);
  EXPECT_THROW(ewma_covariance(random_matrix(5, 2, rng), 1.0), std::invalid_argument);
}

}  // namespace
}  // namespace dpm
