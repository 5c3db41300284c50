#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace survfuse {

/// Observed outcome. A censored label carries the last recorded time point.
struct SurvivalLabel {
  bool event = false;
  double time_days = 0.0;

  friend bool operator==(const SurvivalLabel&, const SurvivalLabel&) = default;
};

/// The ten binary PESI variables, in feature-vector order (after age).
enum class BinaryVar : std::size_t {
  Male = 0,
  Cancer,
  HeartFailure,
  ChronicLungDisease,
  HrGe110,
  SbpLt100,
  RrGe30,
  TempLt36c,
  AlteredMentalStatus,
  O2SatLt90,
};

inline constexpr std::size_t kBinaryVarCount = 10;
inline constexpr std::size_t kClinicalVarCount = 1 + kBinaryVarCount;

/// Names of the clinical feature vector entries, age first.
extern const std::array<const char*, kClinicalVarCount> kClinicalVarNames;

struct ClinicalVariables {
  double age_years = 0.0;
  std::array<bool, kBinaryVarCount> flags{};
  /// Index 0 is age, index 1 + k is BinaryVar k.
  std::array<bool, kClinicalVarCount> missing{};

  bool flag(BinaryVar v) const { return flags[static_cast<std::size_t>(v)]; }
  void set_flag(BinaryVar v, bool value) { flags[static_cast<std::size_t>(v)] = value; }
  bool age_missing() const { return missing[0]; }
  bool flag_missing(BinaryVar v) const { return missing[1 + static_cast<std::size_t>(v)]; }
  bool fully_observed() const;
};

struct PatientRecord {
  std::string patient_id;
  ClinicalVariables clinical;
  SurvivalLabel label;
  std::optional<std::vector<double>> imaging_features;
  std::optional<bool> rv_dysfunction;
  std::optional<int> pesi_score;
};

struct NormParams {
  double mean = 0.0;
  double sd = 1.0;
};

struct Dataset {
  std::vector<PatientRecord> records;
  std::size_t feature_dim = 2048;
  std::optional<NormParams> age_norm_params;

  std::size_t size() const { return records.size(); }
  std::vector<SurvivalLabel> labels() const;
  std::vector<std::string> ids() const;
  /// Records whose ids appear in `ids`, in dataset order.
  Dataset subset(std::span<const std::string> ids) const;
  bool has_imaging() const;
};

/// Column names of the clinical CSV. Defaults are the canonical schema.
struct ClinicalSchema {
  std::string patient_id = "patient_id";
  std::string age = "age";
  std::string sex = "sex";
  std::string heart_rate = "heart_rate";
  std::string systolic_bp = "systolic_bp";
  std::string respiratory_rate = "respiratory_rate";
  std::string temperature_c = "temperature_c";
  std::string altered_mental_status = "altered_mental_status";
  std::string cancer = "cancer";
  std::string heart_failure = "heart_failure";
  std::string chronic_lung_disease = "chronic_lung_disease";
  std::string o2_sat = "o2_sat";
  std::string event = "event";
  std::string time_days = "time_days";
  std::string rv_dysfunction = "rv_dysfunction";

  /// In canonical column order.
  std::vector<std::string> columns() const;
};

/// Vital-sign cut-offs applied at ingest.
struct VitalThresholds {
  double heart_rate_ge = 110.0;
  double systolic_bp_lt = 100.0;
  double respiratory_rate_ge = 30.0;
  double temperature_lt = 36.0;
  double o2_sat_lt = 90.0;
};

Dataset ingest_clinical(const std::filesystem::path& csv_path,
                        const ClinicalSchema& schema = {});

/// One window or acquisition of precomputed imaging features.
struct Acquisition {
  double pe_probability = 0.0;
  std::vector<double> features;
};

/// Picks the acquisition with the highest PE probability (lowest index on ties).
Acquisition aggregate_acquisitions(std::span<const Acquisition> windows);

/// Reads `patient_id, acquisition_id, pe_probability, f0..f{d-1}` and reduces
/// each patient to one feature vector. Returns the per-patient vectors and d.
struct FeatureTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, Acquisition> by_patient;
};
FeatureTable ingest_features(const std::filesystem::path& csv_path);

/// Copies features onto matching records and sets ds.feature_dim.
/// Patients absent from the table keep imaging_features empty.
void attach_features(Dataset& ds, const FeatureTable& table);

/// Statistics that impute and normalize clinical variables.
struct ImputationParams {
  std::array<bool, kBinaryVarCount> binary_fill{};
  double age_fill = 0.0;
  NormParams age_norm;
};

ImputationParams fit_imputation(const Dataset& ds, std::span<const std::string> reference_ids);
Dataset apply_imputation(const Dataset& ds, const ImputationParams& params);
/// fit_imputation on the reference ids followed by apply_imputation.
Dataset impute_missing(const Dataset& ds, std::span<const std::string> reference_ids);

std::array<double, kClinicalVarCount> clinical_feature_vector(const PatientRecord& rec,
                                                              const NormParams& params);
/// Stacks clinical_feature_vector for every record.
Eigen::MatrixXd clinical_matrix(const Dataset& ds, const NormParams& params);
/// Stacks imaging features; every record must carry them.
Eigen::MatrixXd imaging_matrix(const Dataset& ds);

/// Clip Hounsfield units to [-1000, 900], then subtract the post-clip mean.
std::vector<double> normalize_volume(std::span<const double> values);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitAssignment {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

/// |train| = floor(r_train n), |val| = floor(r_val n), test takes the rest.
SplitAssignment split_dataset(const Dataset& ds, std::uint64_t seed,
                              const SplitRatios& ratios = {});

inline constexpr double kShortTermHorizonDays = 30.0;

std::vector<SurvivalLabel> truncate_labels(std::span<const SurvivalLabel> labels, double horizon);
std::vector<SurvivalLabel> truncate_30day(std::span<const SurvivalLabel> labels);

}  // namespace survfuse
