#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "survfuse/cli/config.hpp"

namespace survfuse::cli {

struct GenerateOutputs {
  std::filesystem::path clinical;
  std::filesystem::path features;
  std::optional<std::filesystem::path> external_clinical;
  std::optional<std::filesystem::path> external_features;
};

/// Writes clinical.csv and features.csv (plus external_*.csv when requested).
GenerateOutputs cmd_generate(const GeneratorConfig& gen, const std::filesystem::path& out_dir);

/// Runs the study and writes report.json, feature_analysis.json,
/// km_<model>.{csv,svg} and models/<kind>.json under config.output_dir.
StudyResult cmd_run(const StudyConfig& config);

/// Writes patient_id,risk_score,pesi_score,pesi_class for every patient.
void cmd_score(const std::filesystem::path& artifact_path, const std::filesystem::path& patients_csv,
               const std::optional<std::filesystem::path>& features_csv, const std::filesystem::path& out_csv);

/// Re-renders the KM files from report.json and returns the text summary.
std::string cmd_report(const std::filesystem::path& report_json, const std::filesystem::path& out_dir);

/// 1 for validation failures, 2 for runtime and fitting failures.
int exit_code_for(const std::exception& e);

/// Entry point of the survfuse executable.
int run_cli(int argc, char** argv);

}  // namespace survfuse::cli
