#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "dpm/core_model.hpp"
#include "dpm/random.hpp"
#include "dpm/trajectory.hpp"

namespace dpm {

using ParticleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// P weighted points on the n-simplex. Row p of `particles` is particle p;
// log_weights are natural-log and unnormalized.
struct ParticleCloud {
  ParticleMatrix particles;  // P x n
  Eigen::VectorXd log_weights;

  Eigen::Index size() const { return particles.rows(); }
  Eigen::Index assets() const { return particles.cols(); }

  bool has_uniform_weights() const;
  Eigen::VectorXd normalized_weights() const;
  void validate() const;
};

struct DpmOptions {
  Eigen::Index particles = 10000;
  std::uint64_t seed = 1;
  double band_prob = 0.95;
  // Resample only when the effective sample size falls below
  // ess_fraction * P. Off by default: every period is resampled.
  bool ess_resampling = false;
  double ess_fraction = 0.5;
  unsigned workers = 1;
};

// Draws P particles from Dir(alpha0 (1/n, ..., 1/n)). Particle p uses the
// substream (seed, p); the Rng overload draws the seed from `rng`.
ParticleCloud init_cloud(Eigen::Index n, double alpha0, Eigen::Index particles,
                         std::uint64_t seed);
ParticleCloud init_cloud(Eigen::Index n, double alpha0, Eigen::Index particles,
                         Rng& rng);

struct Reweighting {
  Eigen::VectorXd weights;  // normalized
  // log sum_p W_p k_p, with W the cloud's normalized incoming weights and
  // k_p the observation density; equals log((1/P) sum_p k_p) for a
  // uniformly weighted cloud.
  double log_likelihood_increment = 0.0;
};

Reweighting reweight(const ParticleCloud& cloud, const Eigen::VectorXd& r_pa,
                     double r_hf, const DpmParams& params);

Eigen::VectorXd importance_weights(const ParticleCloud& cloud,
                                   const Eigen::VectorXd& r_pa, double r_hf,
                                   const DpmParams& params);

// Multinomial resampling; output log weights are all zero.
ParticleCloud resample_multinomial(const ParticleCloud& cloud,
                                   const Eigen::VectorXd& weights, Rng& rng);

// w^(p) . r_pa_next for every particle.
Eigen::VectorXd predictive_return_distribution(const ParticleCloud& cloud,
                                               const Eigen::VectorXd& r_pa_next);

// Sequential importance resampling filter for the Dirichlet portfolio model.
// The filter can be stopped after any period and resumed on later rows of
// the same panel; random streams are keyed on the absolute period index so a
// split run reproduces an uninterrupted one.
class DpmFilter {
 public:
  struct State {
    ParticleCloud cloud;
    std::optional<Eigen::VectorXd> last_returns;
    Eigen::Index period = 0;
    double log_marginal_likelihood = 0.0;
  };

  DpmFilter(const DpmParams& params, const DpmOptions& options, Eigen::Index assets);

  // Filters every row of `panel`, continuing from the current state.
  WeightTrajectory run(const ReturnPanel& panel);

  const ParticleCloud& cloud() const { return state_.cloud; }
  double log_marginal_likelihood() const { return state_.log_marginal_likelihood; }
  const State& state() const { return state_; }
  void restore(State state);

 private:
  void propagate(const Eigen::VectorXd& r_prev, ParticleMatrix& drifted);
  void summarize_bands(Eigen::RowVectorXd& lower, Eigen::RowVectorXd& upper) const;

  DpmParams params_;
  DpmOptions options_;
  State state_;
};

WeightTrajectory filter_dpm(const ReturnPanel& panel, const DpmParams& params,
                            const DpmOptions& options);

struct AlphaSelection {
  double best_alpha = 0.0;
  std::vector<double> alphas;
  std::vector<double> log_marginal_likelihoods;
};

// Runs the filter once per grid value with a common seed and returns the
// value with the largest log marginal likelihood.
AlphaSelection select_alpha(const ReturnPanel& panel, const std::vector<double>& grid,
                            const DpmParams& base, const DpmOptions& options);

}  // namespace dpm
