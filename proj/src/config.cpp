#include "dpm/config.hpp"

#include <cmath>
#include <stdexcept>

#include "dpm/io.hpp"

#ifndef DPM_VERSION
#define DPM_VERSION "unknown"
#endif

namespace dpm {

EstimatorSettings RunConfig::resolved() const {
  EstimatorSettings s = settings;
  s.dpm.seed = seed;
  s.dpm.band_prob = s.band_prob;
  return s;
}

void RunConfig::validate() const {
  settings.params.validate();
  if (settings.dpm.particles < 1) {
    throw std::invalid_argument("particles must be >= 1");
  }
  if (settings.dpm.workers < 1) {
    throw std::invalid_argument("workers must be >= 1");
  }
  if (!(settings.band_prob > 0.0 && settings.band_prob < 1.0)) {
    throw std::invalid_argument("band-prob must be in (0, 1)");
  }
  if (settings.window.k < 2 || settings.window.step < 1) {
    throw std::invalid_argument("window must be >= 2 and window-step >= 1");
  }
}

nlohmann::json json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return round_significant(value);
}

nlohmann::json run_metadata(const RunConfig& config, const std::string& command,
                            const std::string& input_digest) {
  const EstimatorSettings s = config.resolved();
  nlohmann::json params = {
      {"alpha", json_number(s.params.alpha)},
      {"alpha0", json_number(s.params.alpha0)},
      {"sigma_eps_sq", json_number(s.params.sigma_eps_sq)},
      {"nu", json_number(s.params.nu)},
      {"gaussian_obs", s.params.gaussian_obs},
      {"particles", s.dpm.particles},
      {"ess_resampling", s.dpm.ess_resampling},
      {"window", s.window.k},
      {"window_step", s.window.step},
      {"band_prob", json_number(s.band_prob)},
      {"cndpm_scaled_covariance", s.cndpm_scaled_covariance},
  };
  nlohmann::json meta = {
      {"command", command},
      {"method", method_name(config.method)},
      {"seed", config.seed},
      {"workers", s.dpm.workers},
      {"params", params},
      {"software", "dpm"},
      {"version", software_version()},
      {"returns_unit", "decimal"},
  };
  if (!config.input.empty()) {
    meta["input"] = config.input.filename().string();
    meta["input_digest_fnv1a"] = input_digest;
    meta["fund_column"] = config.fund_column;
  }
  return meta;
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string software_version() { return DPM_VERSION; }

}  // namespace dpm
