#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpm/study.hpp"

namespace dpm {

// Settings of one CLI invocation. Defaults are alpha = 1600,
// sigma_eps_sq = 0.01, nu = 6, 10^4 particles, a 24-period window.
struct RunConfig {
  Method method = Method::dpm;
  EstimatorSettings settings;
  std::uint64_t seed = 1;
  std::filesystem::path input;
  std::string fund_column = "fund";
  std::filesystem::path output_dir = ".";

  // Copies seed, worker count and band probability into `settings`.
  EstimatorSettings resolved() const;
  // Throws std::invalid_argument naming the offending setting.
  void validate() const;
};

// Run metadata embedded in every JSON report: enough to rerun the exact
// computation. Numbers are rounded to 12 significant digits.
nlohmann::json run_metadata(const RunConfig& config, const std::string& command,
                            const std::string& input_digest);

// Rounds to 12 significant digits; NaN and infinities become null.
nlohmann::json json_number(double value);

// Serializes with two-space indentation and a trailing newline.
std::string dump_json(const nlohmann::json& doc);

std::string software_version();

}  // namespace dpm
