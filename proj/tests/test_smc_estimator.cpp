#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpm/evaluation.hpp"
#include "dpm/gaussian_estimators.hpp"
#include "dpm/smc_estimator.hpp"
#include "test_support.hpp"

using dpm::testing::make_panel;
using dpm::testing::vec;

namespace {

dpm::ParticleCloud two_particles(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  dpm::ParticleCloud c;
  c.particles.resize(2, a.size());
  c.particles.row(0) = a.transpose();
  c.particles.row(1) = b.transpose();
  c.log_weights = Eigen::VectorXd::Zero(2);
  return c;
}

}  // namespace

TEST(InitCloud, SingleAssetAndConcentrationLimit) {
  const auto one = dpm::init_cloud(1, 10.0, 50, 1);
  EXPECT_TRUE((one.particles.array() == 1.0).all());
  const auto tight = dpm::init_cloud(4, 1e9, 200, 2);
  EXPECT_LT((tight.particles.array() - 0.25).abs().maxCoeff(), 1e-3);
  EXPECT_TRUE(tight.has_uniform_weights());
  EXPECT_THROW(dpm::init_cloud(3, 1.0, 1, 1), std::invalid_argument);
}

TEST(InitCloud, MeanWithinThreeStandardErrors) {
  const auto cloud = dpm::init_cloud(3, 3.0, 100000, 7);
  const Eigen::RowVectorXd mean = cloud.particles.colwise().mean();
  // Var of a symmetric Dirichlet(1,1,1) component: (1/3)(2/3)/4.
  const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 4.0 / 100000.0);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LT(std::abs(mean[i] - 1.0 / 3.0), 3 * se);
}

TEST(ImportanceWeights, IdenticalParticlesGiveUniformWeights) {
  dpm::ParticleCloud c;
  c.particles = dpm::ParticleMatrix::Constant(5, 2, 0.5);
  c.log_weights = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd w = dpm::importance_weights(c, vec({0.01, 0.02}), 0.3, {});
  EXPECT_LT((w.array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(ImportanceWeights, HandEvaluatedKernelRatio) {
  // Residuals 0 and 0.1 with nu = 6, sigma^2 = 0.01:
  // w1 / w2 = ((0.06 + 0.01) / 0.06)^3.5.
  const auto c = two_particles(vec({1.0, 0.0}), vec({0.0, 1.0}));
  const Eigen::VectorXd r = vec({0.02, 0.12});
  dpm::DpmParams p;
  const Eigen::VectorXd w = dpm::importance_weights(c, r, 0.02, p);
  const double ratio = std::pow(0.07 / 0.06, 3.5);
  EXPECT_NEAR(w[0] / w[1], ratio, 1e-12);
  EXPECT_NEAR(w[0], ratio / (1.0 + ratio), 1e-12);
  EXPECT_NEAR(w[0], 0.6317, 1e-4);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_GT(w[0], w[1]);
}

TEST(ImportanceWeights, GaussianKernelAndUnderflow) {
  const auto c = two_particles(vec({1.0, 0.0}), vec({0.0, 1.0}));
  dpm::DpmParams p;
  p.gaussian_obs = true;
  const Eigen::VectorXd w = dpm::importance_weights(c, vec({0.0, 0.1}), 0.0, p);
  EXPECT_NEAR(w[0] / w[1], std::exp(0.01 / (2 * 0.01)), 1e-12);

  // Huge residual: the log-space computation still normalizes.
  p.sigma_eps_sq = 1e-12;
  const Eigen::VectorXd far = dpm::importance_weights(c, vec({0.0, 0.1}), 0.5, p);
  EXPECT_NEAR(far.sum(), 1.0, 1e-12);
  EXPECT_GT(far[1], 0.99);
}

TEST(Reweight, IncrementIsLogMeanKernel) {
  const auto c = two_particles(vec({0.3, 0.7}), vec({0.6, 0.4}));
  const Eigen::VectorXd r = vec({0.05, -0.02});
  dpm::DpmParams p;
  const auto rw = dpm::reweight(c, r, 0.01, p);
  const double k0 = std::exp(dpm::student_t_logpdf(0.01, 0.3 * 0.05 - 0.7 * 0.02, 0.01, 6.0));
  const double k1 = std::exp(dpm::student_t_logpdf(0.01, 0.6 * 0.05 - 0.4 * 0.02, 0.01, 6.0));
  EXPECT_NEAR(rw.log_likelihood_increment, std::log(0.5 * (k0 + k1)), 1e-12);
}

TEST(Resample, DegenerateWeightCopiesOneParticle) {
  const auto c = two_particles(vec({0.2, 0.8}), vec({0.9, 0.1}));
  dpm::Rng rng(1);
  const auto out = dpm::resample_multinomial(c, vec({0.0, 1.0}), rng);
  EXPECT_EQ(out.size(), 2);
  for (Eigen::Index p = 0; p < 2; ++p) EXPECT_EQ(out.particles(p, 0), 0.9);
  EXPECT_TRUE(out.has_uniform_weights());
}

TEST(Resample, BinomialOccupancy) {
  const Eigen::Index big = 10000;
  dpm::ParticleCloud c;
  c.particles.resize(big, 2);
  for (Eigen::Index p = 0; p < big; ++p) {
    c.particles.row(p) << (p == 0 ? 1.0 : 0.0), (p == 0 ? 0.0 : 1.0);
  }
  c.log_weights = Eigen::VectorXd::Zero(big);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(big);
  w[0] = 0.9;
  w[1] = 0.1;
  dpm::Rng rng(3);
  const auto out = dpm::resample_multinomial(c, w, rng);
  const double first = out.particles.col(0).sum();
  EXPECT_LT(std::abs(first - 0.9 * big), 4 * std::sqrt(big * 0.09));
}

TEST(Resample, UniformBootstrapPreservesMean) {
  const auto cloud = dpm::init_cloud(3, 5.0, 100000, 4);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(cloud.size(), 1.0 / cloud.size());
  dpm::Rng rng(9);
  const auto out = dpm::resample_multinomial(cloud, w, rng);
  const Eigen::RowVectorXd before = cloud.particles.colwise().mean();
  const Eigen::RowVectorXd after = out.particles.colwise().mean();
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double sd = std::sqrt((cloud.particles.col(i).array() - before[i]).square().mean());
    EXPECT_LT(std::abs(after[i] - before[i]), 4 * sd / std::sqrt(100000.0));
  }
}

TEST(PredictiveReturns, DirectEvaluation) {
  const auto c = two_particles(vec({1.0, 0.0}), vec({0.0, 1.0}));
  const Eigen::VectorXd out = dpm::predictive_return_distribution(c, vec({0.01, 0.03}));
  EXPECT_DOUBLE_EQ(out[0], 0.01);
  EXPECT_DOUBLE_EQ(out[1], 0.03);
  EXPECT_EQ(dpm::predictive_return_distribution(c, vec({0.0, 0.0})), Eigen::VectorXd::Zero(2));
  const auto cloud = dpm::init_cloud(4, 2.0, 1000, 5);
  const Eigen::VectorXd flat = dpm::predictive_return_distribution(cloud, Eigen::VectorXd::Constant(4, 0.07));
  EXPECT_LT((flat.array() - 0.07).abs().maxCoeff(), 1e-15);
  const Eigen::VectorXd r = vec({0.01, -0.02, 0.03, 0.0});
  const Eigen::VectorXd mean_w = cloud.particles.colwise().mean().transpose();
  EXPECT_NEAR(dpm::predictive_return_distribution(cloud, r).mean(), mean_w.dot(r), 1e-12);
}

TEST(FilterDpm, SingleAssetIsTrivial) {
  const auto panel = make_panel(Eigen::MatrixXd::Constant(10, 1, 0.01), Eigen::VectorXd::Constant(10, 0.02));
  dpm::DpmOptions o;
  o.particles = 200;
  const auto traj = dpm::filter_dpm(panel, {}, o);
  EXPECT_LT((traj.posterior_mean.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT((traj.prior_mean.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_TRUE(std::isfinite(traj.log_marginal_likelihood));
}

TEST(FilterDpm, SymmetricDataStaysNearUniform) {
  const Eigen::Index periods = 20;
  Eigen::MatrixXd palette(periods, 3);
  for (Eigen::Index t = 0; t < periods; ++t) palette.row(t).setConstant(0.01 * std::sin(t + 1.0));
  const auto panel = make_panel(palette, palette.col(0) + Eigen::VectorXd::Constant(periods, 0.003));
  dpm::DpmOptions o;
  o.particles = 50000;
  const auto traj = dpm::filter_dpm(panel, {}, o);
  EXPECT_LT((traj.posterior_mean.array() - 1.0 / 3.0).abs().maxCoeff(), 0.02);
}

TEST(FilterDpm, TrajectoryInvariants) {
  const auto sim = dpm::testing::simulated(4, 60, 1600.0, 1e-4, 21);
  dpm::DpmOptions o;
  o.particles = 3000;
  const auto traj = dpm::filter_dpm(sim.panel, {1600.0, 100.0, 1e-4, 6.0, false}, o);
  ASSERT_EQ(traj.periods(), 60);
  for (Eigen::Index t = 0; t < traj.periods(); ++t) {
    EXPECT_NEAR(traj.prior_mean.row(t).sum(), 1.0, 1e-6);
    EXPECT_NEAR(traj.posterior_mean.row(t).sum(), 1.0, 1e-6);
    EXPECT_TRUE((traj.lower.row(t).array() <= traj.posterior_mean.row(t).array()).all());
    EXPECT_TRUE((traj.posterior_mean.row(t).array() <= traj.upper.row(t).array()).all());
    EXPECT_NEAR(traj.forecast_return[t], traj.prior_mean.row(t).dot(sim.panel.palette.row(t)), 1e-15);
  }
  EXPECT_EQ(traj.dates, sim.panel.dates);
}

// alpha = 1600, sigma_eps_sq = 0.01, nu = 6, n = 4, T = 120: posterior-mean
// weight error at most 0.05. Evaluated as the median over 20 simulated panels
// so the outcome does not hinge on one draw.
TEST(FilterDpm, RecoversSimulatedWeightsAtDefaultNoise) {
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sim = dpm::testing::simulated(4, 120, 1600.0, 0.01, 100 + seed);
    dpm::DpmOptions o;
    o.seed = 17 + seed;
    const auto traj = dpm::filter_dpm(sim.panel, {}, o);
    errors.push_back(dpm::weight_mae(sim.weights, traj.posterior_mean).overall);
  }
  EXPECT_LE(dpm::median(errors), 0.05);
}

TEST(FilterDpm, RecoversSimulatedWeightsWithInformativeFund) {
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sim = dpm::testing::simulated(4, 120, 1600.0, 2e-5, 200 + seed);
    dpm::DpmOptions o;
    o.seed = 3 + seed;
    const auto traj = dpm::filter_dpm(sim.panel, {1600.0, 100.0, 2e-5, 6.0, false}, o);
    errors.push_back(dpm::weight_mae(sim.weights, traj.posterior_mean).overall);
  }
  EXPECT_LE(dpm::median(errors), 0.05);
}

TEST(FilterDpm, BitReproducibleAcrossWorkerCounts) {
  const auto sim = dpm::testing::simulated(5, 30, 1600.0, 1e-3, 8);
  dpm::DpmOptions o;
  o.particles = 2000;
  o.seed = 5;
  const auto a = dpm::filter_dpm(sim.panel, {}, o);
  const auto b = dpm::filter_dpm(sim.panel, {}, o);
  o.workers = 3;
  const auto c = dpm::filter_dpm(sim.panel, {}, o);
  EXPECT_EQ(a.posterior_mean, b.posterior_mean);
  EXPECT_EQ(a.log_marginal_likelihood, b.log_marginal_likelihood);
  EXPECT_EQ(a.posterior_mean, c.posterior_mean);
  EXPECT_EQ(a.lower, c.lower);
  EXPECT_EQ(a.log_marginal_likelihood, c.log_marginal_likelihood);
}

TEST(FilterDpm, SplitRunReproducesFullRun) {
  const auto sim = dpm::testing::simulated(3, 40, 1600.0, 1e-3, 12);
  dpm::DpmOptions o;
  o.particles = 2000;
  o.seed = 99;
  const dpm::DpmParams p{1600.0, 100.0, 1e-3, 6.0, false};
  dpm::DpmFilter full(p, o, 3);
  const auto whole = full.run(sim.panel);

  dpm::DpmFilter first(p, o, 3);
  first.run(sim.panel.slice(0, 25));
  const dpm::DpmFilter::State saved = first.state();
  dpm::DpmFilter second(p, o, 3);
  second.restore(saved);
  const auto rest = second.run(sim.panel.slice(25, 15));
  EXPECT_NEAR(second.log_marginal_likelihood(), whole.log_marginal_likelihood, 1e-9);
  EXPECT_LT((rest.posterior_mean - whole.posterior_mean.bottomRows(15)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FilterDpm, EssResamplingOptionRuns) {
  const auto sim = dpm::testing::simulated(3, 30, 1600.0, 1e-3, 13);
  dpm::DpmOptions o;
  o.particles = 2000;
  o.ess_resampling = true;
  const auto traj = dpm::filter_dpm(sim.panel, {1600.0, 100.0, 1e-3, 6.0, false}, o);
  EXPECT_LT(dpm::weight_mae(sim.weights, traj.posterior_mean).overall, 0.1);
  for (Eigen::Index t = 0; t < traj.periods(); ++t) {
    EXPECT_NEAR(traj.posterior_mean.row(t).sum(), 1.0, 1e-6);
  }
}

TEST(FilterDpm, MatchesConditionallyNormalFilterInTheGaussianLimit) {
  const auto sim = dpm::testing::simulated(4, 50, 1e6, 1e-3, 31, true);
  dpm::DpmParams p{1e6, 100.0, 1e-3, 6.0, true};
  dpm::DpmOptions o;
  o.particles = 50000;
  const auto smc = dpm::filter_dpm(sim.panel, p, o);
  const auto cn = dpm::cndpm_filter(sim.panel, p);
  EXPECT_LT((smc.posterior_mean - cn.posterior_mean).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SelectAlpha, SingletonGridAndFiniteCurve) {
  const auto sim = dpm::testing::simulated(3, 40, 1600.0, 1e-3, 14);
  dpm::DpmOptions o;
  o.particles = 1000;
  const auto one = dpm::select_alpha(sim.panel, {400.0}, {}, o);
  EXPECT_EQ(one.best_alpha, 400.0);
  const auto curve = dpm::select_alpha(sim.panel, {100.0, 1600.0, 25600.0}, {}, o);
  ASSERT_EQ(curve.log_marginal_likelihoods.size(), 3u);
  for (double v : curve.log_marginal_likelihoods) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(dpm::select_alpha(sim.panel, {}, {}, o), std::invalid_argument);
  EXPECT_THROW(dpm::select_alpha(sim.panel, {-1.0}, {}, o), std::invalid_argument);
}
