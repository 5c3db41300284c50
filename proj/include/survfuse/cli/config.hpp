#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "survfuse/analysis.hpp"

namespace survfuse::cli {

/// Synthetic cohort written by `generate`.
struct GeneratorConfig {
  std::size_t n = 1000;
  std::size_t n_external = 0;  ///< 0 skips the external cohort
  std::uint64_t seed = 7;
  double baseline_rate = 0.01;
  double censor_rate = 0.005;
  std::size_t img_dim = 32;
  std::array<double, 2> latent_weights{1.0, 1.0};
  double missing_fraction = 0.02;
  int max_acquisitions = 3;
};

struct CliConfig {
  StudyConfig study;
  std::optional<GeneratorConfig> generator;
};

/// Strict parse: unknown keys and out-of-range values raise InvalidConfig
/// with the offending field path. Relative data paths resolve against
/// `base_dir`.
CliConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
CliConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the study settings (paths included, output_dir excluded).
nlohmann::json study_config_to_json(const StudyConfig& config);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_fingerprint(const StudyConfig& config);

/// Parses a comma list of model names.
std::vector<StudyModel> parse_model_list(const std::string& list);

}  // namespace survfuse::cli
