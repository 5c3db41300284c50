#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "survfuse/dataset.hpp"
#include "survfuse/error.hpp"
#include "survfuse/deep_survival.hpp"
#include "survfuse/fusion.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/rsf.hpp"

namespace survfuse {

// ---------------------------------------------------------------------------
// Risk stratification and RV dysfunction factor-risk analysis
// ---------------------------------------------------------------------------

enum class StratifyMethod { Median, FixedThreshold };

struct StratifyOptions {
  StratifyMethod method = StratifyMethod::Median;
  double threshold = kDefaultNriThreshold;  ///< used by FixedThreshold
};

/// Scores >= cut_value are high risk, so ties at the cut go high.
struct RiskStrata {
  std::vector<std::string> high_ids;
  std::vector<std::string> low_ids;
  double cut_value = 0.0;
  StratifyMethod method = StratifyMethod::Median;
};

RiskStrata stratify(std::span<const double> scores, std::span<const std::string> ids,
                    const StratifyOptions& options = {});

struct RvFactorReport {
  std::size_t n_rv = 0;
  std::size_t rv_high = 0;
  std::optional<double> rv_high_pct;  ///< null without RV patients
  std::size_t n_deaths = 0;
  std::size_t deaths_high = 0;
  std::optional<double> mortality_classification_accuracy;  ///< null without deaths
  /// NoRvPatients and/or NoDeaths when the matching percentage is undefined.
  std::vector<ErrorKind> signals;
};

/// rv_high_pct = 100 |RV and high| / |RV|; accuracy = 100 |deaths and high| / |deaths|.
/// Every stratified id must appear in both flag maps.
RvFactorReport rv_factor_analysis(const RiskStrata& strata,
                                  const std::unordered_map<std::string, bool>& rv_flags,
                                  const std::unordered_map<std::string, bool>& death_flags);

/// Percentage with one decimal, rounding halves away from zero ("68.8").
std::string format_percent(double value);

// ---------------------------------------------------------------------------
// Model vs PESI comparison
// ---------------------------------------------------------------------------

struct PesiComparison {
  double model_c_index = 0.0;
  double pesi_c_index = 0.0;
  /// Mean over resamples of c(model) - c(PESI).
  double mean_difference = 0.0;
  /// Null when every paired difference is zero (TooFewPairs).
  std::optional<TestResult> test;
  bool no_difference = false;
};

/// Wilcoxon signed-rank test over c-index differences on matched bootstrap resamples.
PesiComparison compare_to_pesi(std::span<const double> model_scores, std::span<const double> pesi_scores,
                               std::span<const SurvivalLabel> labels, const BootstrapOptions& options);
/// Same, from precomputed paired resample values.
PesiComparison compare_samples(double model_c_index, double pesi_c_index, std::span<const double> model_samples,
                               std::span<const double> pesi_samples);

// ---------------------------------------------------------------------------
// Study runner
// ---------------------------------------------------------------------------

enum class StudyModel { Pesi, RsfFused, DeepImaging, DeepClinical, DeepMultimodal, DeepPesiFused };

inline constexpr std::array<StudyModel, 6> kAllStudyModels = {
    StudyModel::Pesi,         StudyModel::RsfFused,       StudyModel::DeepImaging,
    StudyModel::DeepClinical, StudyModel::DeepMultimodal, StudyModel::DeepPesiFused};

std::string_view to_string(StudyModel m) noexcept;
std::optional<StudyModel> parse_study_model(std::string_view s) noexcept;
/// Needs imaging features to train or score.
bool uses_imaging(StudyModel m) noexcept;
/// Output is a fused Cox linear predictor (mapped through a sigmoid for NRI).
bool is_linear_predictor(StudyModel m) noexcept;

struct StudyConfig {
  std::filesystem::path clinical_csv;
  std::filesystem::path features_csv;
  std::filesystem::path external_clinical_csv;
  std::filesystem::path external_features_csv;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;
  SplitRatios split;
  std::vector<StudyModel> models{kAllStudyModels.begin(), kAllStudyModels.end()};
  TrainConfig deep_clinical{.hidden_dims = {32}};
  TrainConfig deep_imaging{.hidden_dims = {64}};
  RsfParams rsf;
  double nri_threshold = kDefaultNriThreshold;
  int bootstrap_resamples = 1000;
  StratifyOptions stratification;
  bool short_term = true;
  /// Split used for Kaplan-Meier stratification.
  std::string km_split = "test";
};

/// Frozen preprocessing: imputation statistics and imaging column scaling.
struct Preprocessing {
  ImputationParams imputation;
  std::vector<double> imaging_mean;
  std::vector<double> imaging_sd;
  std::size_t feature_dim = 0;
};

/// Every fitted component the study produced.
struct StudyArtifacts {
  Preprocessing preprocessing;
  std::optional<MlpSurvModel> clin_mlp;
  std::optional<MlpSurvModel> img_mlp;
  std::optional<ForestModel> rsf_clin;
  std::optional<ForestModel> rsf_img;
  std::optional<FusionModel> multimodal;
  std::optional<FusionModel> pesi_fused;
  std::optional<FusionModel> rsf_fused;
};

/// Imputes and scales `ds` with frozen statistics.
Dataset preprocess(const Dataset& ds, const Preprocessing& prep);
Eigen::MatrixXd scaled_imaging_matrix(const Dataset& preprocessed, const Preprocessing& prep);

/// Risk scores of one study model for every record of a raw dataset:
/// PESI points, MLP sigmoid outputs, or the fused linear predictor.
std::vector<double> score_model(const StudyArtifacts& artifacts, StudyModel model, const Dataset& raw);

struct ModelEval {
  StudyModel model = StudyModel::Pesi;
  double c_index = 0.0;
  Interval ci;
};

struct SplitEval {
  std::string split;
  std::size_t n = 0;
  std::size_t n_events = 0;
  std::vector<ModelEval> models;
};

struct NriEntry {
  std::string label;  ///< +Clinical, +Imaging or +PESI
  StudyModel old_model = StudyModel::DeepImaging;
  StudyModel new_model = StudyModel::DeepMultimodal;
  NriResult result;
  Interval ci;
};

struct SplitNri {
  std::string split;
  std::vector<NriEntry> entries;
};

struct KmEntry {
  StudyModel model = StudyModel::Pesi;
  std::string split;
  double cut_value = 0.0;
  KmCurve high;
  KmCurve low;
  std::optional<TestResult> logrank;  ///< null when one stratum is empty
};

struct RvPatient {
  std::string id;
  double linear_predictor = 0.0;
  double probability = 0.0;
  bool rv_dysfunction = false;
  bool death = false;
  bool high_risk = false;
};

struct RvSection {
  std::string split;
  double cut_value = 0.0;
  RvFactorReport report;
  std::vector<RvPatient> patients;
};

struct ComparisonEntry {
  std::string split;
  std::string horizon;  ///< "overall" or "short_term"
  StudyModel model = StudyModel::DeepMultimodal;
  PesiComparison result;
};

struct FeatureAnalysis {
  std::vector<std::string> names;
  std::vector<double> importance;
  std::vector<std::optional<double>> predictive_ability;
};

struct StudyReport {
  std::vector<SplitEval> overall;
  std::vector<SplitEval> short_term;
  std::vector<SplitNri> nri;
  std::vector<KmEntry> km;
  std::optional<RvSection> rv_analysis;
  std::vector<ComparisonEntry> comparisons;
  std::optional<FeatureAnalysis> clinical_features;
  std::string config_fingerprint;
};

struct StudyResult {
  StudyReport report;
  StudyArtifacts artifacts;
};

/// Loaded cohorts, before imputation.
struct StudyData {
  Dataset internal;
  std::optional<Dataset> external;
};

/// Reads the configured CSVs; failures are labelled with the "ingest" stage.
StudyData load_study_data(const StudyConfig& config);

/// split -> impute -> deep heads -> fusion -> RSF baselines -> evaluation.
/// Deterministic for a given config and data.
StudyResult run_study(const StudyConfig& config, const StudyData& data);
StudyResult run_study(const StudyConfig& config);

}  // namespace survfuse
