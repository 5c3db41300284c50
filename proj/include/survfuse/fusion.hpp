#pragma once

#include <map>
#include <span>
#include <vector>

#include "survfuse/cox.hpp"
#include "survfuse/modality.hpp"

namespace survfuse {

/// Late fusion: a Cox model over z-standardized per-modality risk scores.
struct FusionModel {
  CoxModel inner;
  std::vector<Modality> covariate_sources;  ///< canonical Modality order
  std::vector<double> means;                ///< frozen at fit time
  std::vector<double> sds;
};

using ModalityScores = std::map<Modality, std::vector<double>>;

inline constexpr double kFusionRidge = 1e-8;

/// FitOptions used for fusion fits unless the caller overrides them.
FitOptions default_fusion_options();

FusionModel fit_fusion(const ModalityScores& scores, std::span<const SurvivalLabel> labels,
                       const FitOptions& options = default_fusion_options());

double predict_fused(const FusionModel& model, const std::map<Modality, double>& scores);
std::vector<double> predict_fused(const FusionModel& model, const ModalityScores& scores);

}  // namespace survfuse
