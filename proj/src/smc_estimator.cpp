#include "dpm/smc_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpm/parallel.hpp"

namespace dpm {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kPropagateStream = 2;
constexpr std::uint64_t kResampleStream = 3;

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Linear-interpolation (type 7) quantile; reorders `values`.
double empirical_quantile(std::vector<double>& values, double q) {
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo),
                   values.end());
  const double below = values[lo];
  if (lo + 1 >= values.size()) return below;
  const double above = *std::min_element(
      values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return below + (h - static_cast<double>(lo)) * (above - below);
}

double weighted_quantile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                         double q) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  double cum = 0.0;
  for (Eigen::Index idx : order) {
    cum += weights[idx];
    if (cum >= q) return values[idx];
  }
  return values[order.back()];
}

}  // namespace

bool ParticleCloud::has_uniform_weights() const {
  return log_weights.size() == 0 ||
         log_weights.maxCoeff() == log_weights.minCoeff();
}

Eigen::VectorXd ParticleCloud::normalized_weights() const {
  if (has_uniform_weights()) {
    return Eigen::VectorXd::Constant(size(), 1.0 / static_cast<double>(size()));
  }
  const double m = log_weights.maxCoeff();
  Eigen::VectorXd w = (log_weights.array() - m).exp();
  return w / w.sum();
}

void ParticleCloud::validate() const {
  if (size() < 2) {
    throw std::invalid_argument("ParticleCloud: need at least two particles");
  }
  if (log_weights.size() != size()) {
    throw std::invalid_argument("ParticleCloud: one log weight per particle");
  }
  for (Eigen::Index p = 0; p < size(); ++p) {
    if (!SimplexWeights::is_valid(particles.row(p).transpose())) {
      throw std::invalid_argument("ParticleCloud: particle off the simplex");
    }
  }
}

ParticleCloud init_cloud(Eigen::Index n, double alpha0, Eigen::Index particles,
                         std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("init_cloud: n must be >= 1");
  if (particles < 2) throw std::invalid_argument("init_cloud: need P >= 2");
  if (!(alpha0 > 0.0)) throw std::invalid_argument("init_cloud: alpha0 must be > 0");
  ParticleCloud cloud;
  cloud.particles.resize(particles, n);
  cloud.log_weights = Eigen::VectorXd::Zero(particles);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd draw(n);
  for (Eigen::Index p = 0; p < particles; ++p) {
    Rng rng = Rng::substream(seed, {kInitStream, static_cast<std::uint64_t>(p)});
    sample_dirichlet_into(mean, alpha0, rng, draw);
    cloud.particles.row(p) = draw.transpose();
  }
  return cloud;
}

ParticleCloud init_cloud(Eigen::Index n, double alpha0, Eigen::Index particles,
                         Rng& rng) {
  return init_cloud(n, alpha0, particles, rng());
}

Reweighting reweight(const ParticleCloud& cloud, const Eigen::VectorXd& r_pa,
                     double r_hf, const DpmParams& params) {
  if (r_pa.size() != cloud.assets()) {
    throw std::invalid_argument("importance_weights: return vector size mismatch");
  }
  if (!std::isfinite(r_hf) || !r_pa.allFinite()) {
    throw std::invalid_argument("importance_weights: non-finite observation");
  }
  const ObservationKernel kernel(params);
  const Eigen::VectorXd implied = cloud.particles * r_pa;
  const Eigen::Index count = cloud.size();

  Eigen::VectorXd log_prior(count);
  if (cloud.has_uniform_weights()) {
    log_prior.setConstant(-std::log(static_cast<double>(count)));
  } else {
    log_prior = cloud.log_weights.array() - log_sum_exp(cloud.log_weights);
  }
  Eigen::VectorXd log_post(count);
  for (Eigen::Index p = 0; p < count; ++p) {
    log_post[p] = log_prior[p] + kernel.log_density(r_hf - implied[p]);
  }
  const double top = log_post.maxCoeff();
  if (!std::isfinite(top)) {
    throw std::runtime_error(
        "importance_weights: every observation density underflowed; the fund "
        "return is inconsistent with the particle cloud beyond numeric range");
  }
  Reweighting out;
  out.weights = (log_post.array() - top).exp();
  const double total = out.weights.sum();
  out.weights /= total;
  out.log_likelihood_increment = top + std::log(total);
  return out;
}

Eigen::VectorXd importance_weights(const ParticleCloud& cloud,
                                   const Eigen::VectorXd& r_pa, double r_hf,
                                   const DpmParams& params) {
  return reweight(cloud, r_pa, r_hf, params).weights;
}

ParticleCloud resample_multinomial(const ParticleCloud& cloud,
                                   const Eigen::VectorXd& weights, Rng& rng) {
  const Eigen::Index count = cloud.size();
  if (weights.size() != count) {
    throw std::invalid_argument("resample_multinomial: one weight per particle");
  }
  std::vector<double> cdf(static_cast<std::size_t>(count));
  double running = 0.0;
  for (Eigen::Index p = 0; p < count; ++p) {
    running += weights[p];
    cdf[static_cast<std::size_t>(p)] = running;
  }
  ParticleCloud out;
  out.particles.resize(count, cloud.assets());
  out.log_weights = Eigen::VectorXd::Zero(count);
  for (Eigen::Index p = 0; p < count; ++p) {
    const double u = rng.uniform() * running;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.particles.row(p) = cloud.particles.row(it - cdf.begin());
  }
  return out;
}

Eigen::VectorXd predictive_return_distribution(const ParticleCloud& cloud,
                                               const Eigen::VectorXd& r_pa_next) {
  if (r_pa_next.size() != cloud.assets()) {
    throw std::invalid_argument("predictive_return_distribution: size mismatch");
  }
  return cloud.particles * r_pa_next;
}

DpmFilter::DpmFilter(const DpmParams& params, const DpmOptions& options,
                     Eigen::Index assets)
    : params_(params), options_(options) {
  params_.validate();
  if (options_.particles < 2) {
    throw std::invalid_argument("DpmFilter: need at least two particles");
  }
  if (!(options_.band_prob > 0.0 && options_.band_prob < 1.0)) {
    throw std::invalid_argument("DpmFilter: band probability must be in (0, 1)");
  }
  state_.cloud = init_cloud(assets, params_.alpha0, options_.particles, options_.seed);
}

void DpmFilter::restore(State state) {
  state.cloud.validate();
  if (state.cloud.assets() != state_.cloud.assets()) {
    throw std::invalid_argument("DpmFilter::restore: asset count mismatch");
  }
  state_ = std::move(state);
}

void DpmFilter::propagate(const Eigen::VectorXd& r_prev, ParticleMatrix& drifted) {
  const Eigen::Index count = state_.cloud.size();
  const Eigen::Index n = state_.cloud.assets();
  if (r_prev.minCoeff() <= -1.0) {
    throw std::domain_error("DpmFilter: palette return <= -100%");
  }
  const Eigen::RowVectorXd gross = (Eigen::VectorXd::Ones(n) + r_prev).transpose();
  drifted.resize(count, n);
  const auto period = static_cast<std::uint64_t>(state_.period);
  const std::uint64_t seed = options_.seed;
  const double alpha = params_.alpha;
  ParticleMatrix& particles = state_.cloud.particles;
  parallel_for(count, options_.workers, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    for (std::ptrdiff_t p = begin; p < end; ++p) {
      drifted.row(p) = particles.row(p).cwiseProduct(gross);
      drifted.row(p) /= drifted.row(p).sum();
      Rng rng = Rng::substream(seed, {kPropagateStream, period,
                                      static_cast<std::uint64_t>(p)});
      Eigen::Map<const Eigen::VectorXd> mean(drifted.row(p).data(), n);
      Eigen::Map<Eigen::VectorXd> out(particles.row(p).data(), n);
      sample_dirichlet_into(mean, alpha, rng, out);
    }
  });
}

void DpmFilter::summarize_bands(Eigen::RowVectorXd& lower,
                                Eigen::RowVectorXd& upper) const {
  const ParticleCloud& cloud = state_.cloud;
  lower.resize(cloud.assets());
  upper.resize(cloud.assets());
  const double q_lo = 0.5 * (1.0 - options_.band_prob);
  const double q_hi = 1.0 - q_lo;
  if (cloud.has_uniform_weights()) {
    std::vector<double> column(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index j = 0; j < cloud.assets(); ++j) {
      for (Eigen::Index p = 0; p < cloud.size(); ++p) {
        column[static_cast<std::size_t>(p)] = cloud.particles(p, j);
      }
      lower[j] = empirical_quantile(column, q_lo);
      upper[j] = empirical_quantile(column, q_hi);
    }
    return;
  }
  const Eigen::VectorXd w = cloud.normalized_weights();
  for (Eigen::Index j = 0; j < cloud.assets(); ++j) {
    const Eigen::VectorXd column = cloud.particles.col(j);
    lower[j] = weighted_quantile(column, w, q_lo);
    upper[j] = weighted_quantile(column, w, q_hi);
  }
}

WeightTrajectory DpmFilter::run(const ReturnPanel& panel) {
  panel.validate();
  const Eigen::Index n = state_.cloud.assets();
  if (panel.assets() != n) {
    throw std::invalid_argument("DpmFilter::run: panel asset count differs from filter");
  }
  const Eigen::Index periods = panel.periods();
  WeightTrajectory traj;
  traj.method = "dpm";
  traj.resize(periods, n);
  traj.dates = panel.dates;
  traj.asset_names = panel.asset_names;
  traj.band_prob = options_.band_prob;
  traj.actual_return = panel.fund;

  ParticleMatrix drifted;
  Eigen::RowVectorXd lo;
  Eigen::RowVectorXd hi;
  for (Eigen::Index t = 0; t < periods; ++t) {
    const Eigen::VectorXd r_pa = panel.palette.row(t).transpose();
    const double r_hf = panel.fund[t];
    const Eigen::VectorXd incoming = state_.cloud.normalized_weights();

    // Prior mean is the exact conditional expectation given the cloud: the
    // Dirichlet mean of each particle's drifted weights.
    if (state_.last_returns) {
      propagate(*state_.last_returns, drifted);
      traj.prior_mean.row(t) = incoming.transpose() * drifted;
    } else {
      traj.prior_mean.row(t) = incoming.transpose() * state_.cloud.particles;
    }

    const Reweighting rw = reweight(state_.cloud, r_pa, r_hf, params_);
    state_.log_marginal_likelihood += rw.log_likelihood_increment;
    traj.posterior_mean.row(t) = rw.weights.transpose() * state_.cloud.particles;

    const double ess = 1.0 / rw.weights.squaredNorm();
    const bool resample =
        !options_.ess_resampling ||
        ess < options_.ess_fraction * static_cast<double>(state_.cloud.size());
    if (resample) {
      Rng rng = Rng::substream(options_.seed,
                               {kResampleStream, static_cast<std::uint64_t>(state_.period)});
      state_.cloud = resample_multinomial(state_.cloud, rw.weights, rng);
    } else {
      state_.cloud.log_weights = rw.weights.array().log();
    }

    summarize_bands(lo, hi);
    traj.lower.row(t) = lo.cwiseMin(traj.posterior_mean.row(t));
    traj.upper.row(t) = hi.cwiseMax(traj.posterior_mean.row(t));

    const Eigen::VectorXd prior = traj.prior_mean.row(t).transpose();
    const Eigen::VectorXd post = traj.posterior_mean.row(t).transpose();
    traj.forecast_return[t] = prior.dot(r_pa);
    traj.fitted_return[t] = post.dot(r_pa);
    state_.last_returns = r_pa;
    ++state_.period;
  }
  traj.log_marginal_likelihood = state_.log_marginal_likelihood;
  return traj;
}

WeightTrajectory filter_dpm(const ReturnPanel& panel, const DpmParams& params,
                            const DpmOptions& options) {
  panel.validate();
  DpmFilter filter(params, options, panel.assets());
  return filter.run(panel);
}

AlphaSelection select_alpha(const ReturnPanel& panel, const std::vector<double>& grid,
                            const DpmParams& base, const DpmOptions& options) {
  if (grid.empty()) {
    throw std::invalid_argument("select_alpha: empty alpha grid");
  }
  for (double a : grid) {
    if (!(a > 0.0)) throw std::invalid_argument("select_alpha: alpha values must be > 0");
  }
  AlphaSelection out;
  double best = -std::numeric_limits<double>::infinity();
  for (double a : grid) {
    DpmParams params = base;
    params.alpha = a;
    const WeightTrajectory traj = filter_dpm(panel, params, options);
    out.alphas.push_back(a);
    out.log_marginal_likelihoods.push_back(traj.log_marginal_likelihood);
    if (traj.log_marginal_likelihood > best) {
      best = traj.log_marginal_likelihood;
      out.best_alpha = a;
    }
  }
  return out;
}

}  // namespace dpm
