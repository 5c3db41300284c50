#include "survfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "survfuse/csv.hpp"
#include "survfuse/error.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

namespace {

void validate(const GeneratorSpec& spec) {
  if (spec.n == 0) fail(ErrorKind::InvalidSpec, "n must be positive");
  if (!(spec.baseline_rate > 0.0)) fail(ErrorKind::InvalidSpec, "baseline_rate must be positive");
  if (!(spec.censor_rate >= 0.0)) fail(ErrorKind::InvalidSpec, "censor_rate must be non-negative");
  for (double b : spec.beta_true) {
    if (!std::isfinite(b)) fail(ErrorKind::InvalidSpec, "beta_true must be finite");
  }
}

SurvivalLabel draw_label(Rng& rng, double hazard, double censor_rate) {
  const double event_time = rng.exponential(hazard);
  const double censor_time =
      censor_rate > 0.0 ? rng.exponential(censor_rate) : std::numeric_limits<double>::infinity();
  if (event_time <= censor_time) return {true, event_time};
  return {false, censor_time};
}

double round_to(double v, double step) { return std::round(v / step) * step; }

/// Loading on the clinical latent factor and threshold of each binary flag.
struct FlagModel {
  double loading;
  double threshold;
};
constexpr std::array<FlagModel, kBinaryVarCount> kFlagModels = {{
    {0.0, 0.0},  // male
    {0.8, 1.0},  // cancer
    {0.5, 1.5},  // heart failure
    {0.5, 1.2},  // chronic lung disease
    {0.7, 0.8},  // HR >= 110
    {0.8, 1.5},  // SBP < 100
    {0.6, 1.5},  // RR >= 30
    {0.4, 1.8},  // temp < 36
    {0.8, 1.8},  // altered mental status
    {0.7, 1.0},  // O2 sat < 90
}};

RawVitals draw_vitals(Rng& rng, const ClinicalVariables& c) {
  RawVitals v;
  v.heart_rate = c.flag(BinaryVar::HrGe110) ? std::round(110.0 + 30.0 * rng.uniform())
                                            : std::round(60.0 + 49.0 * rng.uniform());
  v.systolic_bp = c.flag(BinaryVar::SbpLt100) ? std::round(70.0 + 29.0 * rng.uniform())
                                              : std::round(100.0 + 60.0 * rng.uniform());
  v.respiratory_rate = c.flag(BinaryVar::RrGe30) ? std::round(30.0 + 10.0 * rng.uniform())
                                                 : std::round(12.0 + 17.0 * rng.uniform());
  v.temperature_c = c.flag(BinaryVar::TempLt36c) ? round_to(34.0 + 1.9 * rng.uniform(), 0.1)
                                                 : round_to(36.0 + 2.5 * rng.uniform(), 0.1);
  v.o2_sat = c.flag(BinaryVar::O2SatLt90) ? std::round(80.0 + 9.0 * rng.uniform())
                                          : std::round(90.0 + 10.0 * rng.uniform());
  return v;
}

}  // namespace

CoxSample gen_cox_linear(const GeneratorSpec& spec) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.beta_true.size());
  Rng rng(spec.seed);
  CoxSample out;
  out.x.resize(n, p);
  out.labels.reserve(spec.n);
  out.true_risk.reserve(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      out.x(i, k) = rng.normal();
      eta += spec.beta_true[static_cast<std::size_t>(k)] * out.x(i, k);
    }
    out.true_risk.push_back(eta);
    out.labels.push_back(draw_label(rng, spec.baseline_rate * std::exp(eta), spec.censor_rate));
  }
  return out;
}

MultimodalSample gen_multimodal(const GeneratorSpec& spec) {
  validate(spec);
  if (!spec.modality_plan) fail(ErrorKind::InvalidSpec, "gen_multimodal needs a modality_plan");
  const ModalityPlan& plan = *spec.modality_plan;
  if (plan.clin_dim != kClinicalVarCount) {
    fail(ErrorKind::InvalidSpec, "clin_dim must be " + std::to_string(kClinicalVarCount));
  }
  if (plan.img_dim == 0) fail(ErrorKind::InvalidSpec, "img_dim must be positive");
  if (plan.missing_fraction < 0.0 || plan.missing_fraction >= 1.0) {
    fail(ErrorKind::InvalidSpec, "missing_fraction must lie in [0, 1)");
  }
  if (plan.max_acquisitions < 1) fail(ErrorKind::InvalidSpec, "max_acquisitions must be at least 1");

  // Imaging features: the first quarter load on the imaging latent factor,
  // the rest are pure noise.
  const std::size_t informative = std::max<std::size_t>(1, plan.img_dim / 4);
  const auto [w_clin, w_img] = plan.latent_weights;

  Rng rng(spec.seed);
  MultimodalSample out;
  out.dataset.feature_dim = plan.img_dim;
  out.dataset.records.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u_clin = rng.normal();
    const double u_img = rng.normal();

    PatientRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "P%05zu", i + 1);
    rec.patient_id = id;

    ClinicalVariables& c = rec.clinical;
    c.age_years = std::clamp(std::round(62.0 + 12.0 * (0.7 * u_clin + 0.71 * rng.normal())), 18.0, 99.0);
    for (std::size_t k = 0; k < kBinaryVarCount; ++k) {
      c.flags[k] = kFlagModels[k].loading * u_clin + rng.normal() > kFlagModels[k].threshold;
    }
    out.vitals.push_back(draw_vitals(rng, c));

    std::vector<double> features(plan.img_dim);
    for (std::size_t k = 0; k < plan.img_dim; ++k) {
      features[k] = (k < informative ? u_img : 0.0) + rng.normal();
    }
    const int n_acq = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(plan.max_acquisitions)));
    const int primary = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_acq)));
    const double best_prob = 0.6 + 0.4 * rng.uniform();
    std::vector<Acquisition> acqs;
    for (int a = 0; a < n_acq; ++a) {
      if (a == primary) {
        acqs.push_back({best_prob, features});
        continue;
      }
      Acquisition other;
      other.pe_probability = best_prob * (0.2 + 0.7 * rng.uniform());
      other.features.resize(plan.img_dim);
      for (std::size_t k = 0; k < plan.img_dim; ++k) other.features[k] = features[k] + 2.0 * rng.normal();
      acqs.push_back(std::move(other));
    }
    rec.imaging_features = features;
    out.acquisitions.push_back(std::move(acqs));

    const double clin_view = w_clin * u_clin;
    const double img_view = w_img * u_img;
    const double eta = clin_view + img_view;
    out.clin_view.push_back(clin_view);
    out.img_view.push_back(img_view);
    out.true_risk.push_back(eta);
    rec.label = draw_label(rng, spec.baseline_rate * std::exp(eta), spec.censor_rate);
    rec.rv_dysfunction = rng.bernoulli(1.0 / (1.0 + std::exp(2.5 - 0.8 * u_clin - 0.8 * u_img)));

    if (plan.missing_fraction > 0.0) {
      for (std::size_t k = 0; k < kClinicalVarCount; ++k) {
        if (rng.uniform() >= plan.missing_fraction) continue;
        c.missing[k] = true;
        if (k == 0) {
          c.age_years = std::numeric_limits<double>::quiet_NaN();
        } else {
          c.flags[k - 1] = false;
        }
      }
    }
    out.dataset.records.push_back(std::move(rec));
  }
  return out;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_clinical_csv(const MultimodalSample& sample, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  const ClinicalSchema schema;
  const auto cols = schema.columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';

  for (std::size_t i = 0; i < sample.dataset.size(); ++i) {
    const PatientRecord& rec = sample.dataset.records[i];
    const ClinicalVariables& c = rec.clinical;
    const RawVitals& v = sample.vitals[i];
    auto num = [&](double value, bool missing) { return missing ? std::string() : csv::format_double(value); };
    auto flag = [&](BinaryVar b) {
      return c.flag_missing(b) ? std::string() : std::string(c.flag(b) ? "1" : "0");
    };
    const std::string sex = c.flag_missing(BinaryVar::Male) ? "" : (c.flag(BinaryVar::Male) ? "M" : "F");
    out << csv::escape_field(rec.patient_id) << ',' << num(c.age_years, c.age_missing()) << ',' << sex << ','
        << num(v.heart_rate, c.flag_missing(BinaryVar::HrGe110)) << ','
        << num(v.systolic_bp, c.flag_missing(BinaryVar::SbpLt100)) << ','
        << num(v.respiratory_rate, c.flag_missing(BinaryVar::RrGe30)) << ','
        << num(v.temperature_c, c.flag_missing(BinaryVar::TempLt36c)) << ','
        << flag(BinaryVar::AlteredMentalStatus) << ',' << flag(BinaryVar::Cancer) << ','
        << flag(BinaryVar::HeartFailure) << ',' << flag(BinaryVar::ChronicLungDisease) << ','
        << num(v.o2_sat, c.flag_missing(BinaryVar::O2SatLt90)) << ',' << (rec.label.event ? 1 : 0) << ','
        << csv::format_double(rec.label.time_days) << ','
        << (rec.rv_dysfunction ? (*rec.rv_dysfunction ? "1" : "0") : "") << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

void write_features_csv(const MultimodalSample& sample, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "patient_id,acquisition_id,pe_probability";
  for (std::size_t k = 0; k < sample.dataset.feature_dim; ++k) out << ",f" << k;
  out << '\n';
  for (std::size_t i = 0; i < sample.dataset.size(); ++i) {
    const auto& id = sample.dataset.records[i].patient_id;
    for (std::size_t a = 0; a < sample.acquisitions[i].size(); ++a) {
      const Acquisition& acq = sample.acquisitions[i][a];
      out << csv::escape_field(id) << ',' << id << "-A" << (a + 1) << ',' << csv::format_double(acq.pe_probability);
      for (double f : acq.features) out << ',' << csv::format_double(f);
      out << '\n';
    }
  }
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace survfuse
