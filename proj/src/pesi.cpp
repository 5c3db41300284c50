#include "survfuse/pesi.hpp"

#include <cmath>

#include "survfuse/error.hpp"

namespace survfuse {

std::string_view to_string(PesiClass c) noexcept {
  switch (c) {
    case PesiClass::I: return "I";
    case PesiClass::II: return "II";
    case PesiClass::III: return "III";
    case PesiClass::IV: return "IV";
    case PesiClass::V: return "V";
  }
  return "?";
}

PesiClass pesi_class(int score) noexcept {
  if (score <= 65) return PesiClass::I;
  if (score <= 85) return PesiClass::II;
  if (score <= 105) return PesiClass::III;
  if (score <= 125) return PesiClass::IV;
  return PesiClass::V;
}

PesiResult pesi_score(const ClinicalVariables& clin) {
  if (!clin.fully_observed()) fail(ErrorKind::UnimputedRecord, "PESI needs every clinical variable");
  if (!(clin.age_years > 0.0)) fail(ErrorKind::NonPositiveAge, "age must be positive");

  using W = PesiWeights;
  int score = static_cast<int>(std::lround(clin.age_years));
  auto add = [&](BinaryVar v, int points) {
    if (clin.flag(v)) score += points;
  };
  add(BinaryVar::Male, W::male);
  add(BinaryVar::Cancer, W::cancer);
  add(BinaryVar::HeartFailure, W::heart_failure);
  add(BinaryVar::ChronicLungDisease, W::chronic_lung_disease);
  add(BinaryVar::HrGe110, W::hr_ge_110);
  add(BinaryVar::SbpLt100, W::sbp_lt_100);
  add(BinaryVar::RrGe30, W::rr_ge_30);
  add(BinaryVar::TempLt36c, W::temp_lt_36c);
  add(BinaryVar::AlteredMentalStatus, W::altered_mental_status);
  add(BinaryVar::O2SatLt90, W::o2_sat_lt_90);
  return {score, pesi_class(score)};
}

std::vector<double> pesi_predictor(const Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& rec : ds.records) {
    try {
      out.push_back(static_cast<double>(pesi_score(rec.clinical).score));
    } catch (const Error& e) {
      throw Error(e.kind(), "patient " + rec.patient_id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace survfuse
