#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "survfuse/analysis.hpp"

namespace survfuse::cli {

/// report.json body. Top-level keys: overall, short_term, nri, km,
/// rv_analysis, comparisons, config_fingerprint.
nlohmann::json report_to_json(const StudyReport& report);
nlohmann::json feature_analysis_to_json(const FeatureAnalysis& fa);

KmEntry km_entry_from_json(const nlohmann::json& j);

/// One row per step point: group,time,survival,at_risk,events.
std::string render_km_csv(const KmEntry& entry);
/// Self-contained step plot. Each curve's path carries its step points in a
/// data-points attribute ("time:survival;...") with the same number formatting
/// as the CSV.
std::string render_km_svg(const KmEntry& entry);

/// Writes km_<model>.csv and km_<model>.svg for every KM entry of a report.
void write_km_files(const nlohmann::json& report, const std::filesystem::path& out_dir);

/// Plain-text tables of a report.json, for the `report` command.
std::string render_text_summary(const nlohmann::json& report);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace survfuse::cli
