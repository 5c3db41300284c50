#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "survfuse/dataset.hpp"

namespace survfuse {

/// Layout of a two-modality cohort. Two independent latent factors drive the
/// hazard: the clinical variables observe the first, the imaging features the
/// second, so each modality alone sees only part of the signal.
struct ModalityPlan {
  std::size_t clin_dim = kClinicalVarCount;  ///< must equal the PESI variable count
  std::size_t img_dim = 32;
  /// Log-hazard loadings of the (clinical, imaging) latent factors.
  std::array<double, 2> latent_weights{1.0, 1.0};
  /// Probability that any single clinical cell is blanked out.
  double missing_fraction = 0.0;
  /// Acquisitions per patient are drawn uniformly from 1..max_acquisitions.
  int max_acquisitions = 3;
};

struct GeneratorSpec {
  std::size_t n = 1000;
  std::vector<double> beta_true{1.0, -0.5};
  double baseline_rate = 0.1;  ///< exponential baseline hazard per day
  double censor_rate = 0.05;   ///< independent exponential censoring; 0 disables
  std::optional<ModalityPlan> modality_plan;
  std::uint64_t seed = 0;
};

struct CoxSample {
  Eigen::MatrixXd x;
  std::vector<SurvivalLabel> labels;
  std::vector<double> true_risk;  ///< beta_true' x
};

/// Standard normal covariates; event time t = -ln(u) / (lambda exp(beta' x)).
CoxSample gen_cox_linear(const GeneratorSpec& spec);

/// Raw vital signs, consistent with the thresholded PESI flags.
struct RawVitals {
  double heart_rate = 0.0;
  double systolic_bp = 0.0;
  double respiratory_rate = 0.0;
  double temperature_c = 0.0;
  double o2_sat = 0.0;
};

struct MultimodalSample {
  Dataset dataset;  ///< imaging features already aggregated per patient
  std::vector<RawVitals> vitals;
  std::vector<std::vector<Acquisition>> acquisitions;
  std::vector<double> clin_view;  ///< w_clin * latent_clin
  std::vector<double> img_view;   ///< w_img * latent_img
  std::vector<double> true_risk;  ///< clin_view + img_view
};

MultimodalSample gen_multimodal(const GeneratorSpec& spec);

/// Canonical clinical CSV (header + one row per patient). Missing cells are empty.
void write_clinical_csv(const MultimodalSample& sample, const std::filesystem::path& path);
/// Canonical imaging feature CSV, one row per acquisition.
void write_features_csv(const MultimodalSample& sample, const std::filesystem::path& path);

}  // namespace survfuse
