#pragma once

#include <string_view>
#include <vector>

#include "survfuse/dataset.hpp"

namespace survfuse {

enum class PesiClass { I = 1, II, III, IV, V };

std::string_view to_string(PesiClass c) noexcept;

struct PesiResult {
  int score = 0;
  PesiClass risk_class = PesiClass::I;
};

/// Point weights of the Pulmonary Embolism Severity Index
/// (Aujesky et al., Am J Respir Crit Care Med 2005;172:1041-1046).
/// Age contributes its value in years; each present factor adds its weight.
struct PesiWeights {
  static constexpr int male = 10;
  static constexpr int cancer = 30;
  static constexpr int heart_failure = 10;
  static constexpr int chronic_lung_disease = 10;
  static constexpr int hr_ge_110 = 20;
  static constexpr int sbp_lt_100 = 30;
  static constexpr int rr_ge_30 = 20;
  static constexpr int temp_lt_36c = 20;
  static constexpr int altered_mental_status = 60;
  static constexpr int o2_sat_lt_90 = 20;
};

/// Class bands: I <= 65, II 66-85, III 86-105, IV 106-125, V > 125.
PesiClass pesi_class(int score) noexcept;

PesiResult pesi_score(const ClinicalVariables& clin);

/// PESI points for every record, in record order, as a risk ranking.
std::vector<double> pesi_predictor(const Dataset& ds);

}  // namespace survfuse
