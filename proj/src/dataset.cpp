#include "survfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "survfuse/csv.hpp"
#include "survfuse/error.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

const std::array<const char*, kClinicalVarCount> kClinicalVarNames = {
    "age",           "male",       "cancer",   "heart_failure",
    "chronic_lung_disease", "hr_ge_110", "sbp_lt_100", "rr_ge_30",
    "temp_lt_36c",   "altered_mental_status", "o2_sat_lt_90",
};

bool ClinicalVariables::fully_observed() const {
  return std::none_of(missing.begin(), missing.end(), [](bool m) { return m; });
}

std::vector<SurvivalLabel> Dataset::labels() const {
  std::vector<SurvivalLabel> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.patient_id);
  return out;
}

Dataset Dataset::subset(std::span<const std::string> wanted) const {
  const std::unordered_set<std::string> keep(wanted.begin(), wanted.end());
  Dataset out;
  out.feature_dim = feature_dim;
  out.age_norm_params = age_norm_params;
  for (const auto& r : records) {
    if (keep.contains(r.patient_id)) out.records.push_back(r);
  }
  if (out.records.size() != keep.size()) {
    fail(ErrorKind::InvalidInput, "subset references ids that are not in the dataset");
  }
  return out;
}

bool Dataset::has_imaging() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
    return r.imaging_features.has_value();
  });
}

std::vector<std::string> ClinicalSchema::columns() const {
  return {patient_id,    age,
          sex,           heart_rate,
          systolic_bp,   respiratory_rate,
          temperature_c, altered_mental_status,
          cancer,        heart_failure,
          chronic_lung_disease, o2_sat,
          event,         time_days,
          rv_dysfunction};
}

namespace {

std::optional<bool> parse_sex_male(std::string_view cell) {
  std::string s(cell);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "m" || s == "male" || s == "1") return true;
  if (s == "f" || s == "female" || s == "0") return false;
  return std::nullopt;
}

std::string row_context(std::size_t row_index, std::size_t line) {
  return "row " + std::to_string(row_index) + " (line " + std::to_string(line) + ")";
}

}  // namespace

Dataset ingest_clinical(const std::filesystem::path& csv_path, const ClinicalSchema& schema) {
  const csv::Table table = csv::read_file(csv_path);
  const VitalThresholds vt;

  auto require = [&](const std::string& name) {
    const auto idx = table.column(name);
    if (!idx) fail(ErrorKind::MissingColumn, name);
    return *idx;
  };
  const std::size_t c_id = require(schema.patient_id);
  const std::size_t c_age = require(schema.age);
  const std::size_t c_sex = require(schema.sex);
  const std::size_t c_hr = require(schema.heart_rate);
  const std::size_t c_sbp = require(schema.systolic_bp);
  const std::size_t c_rr = require(schema.respiratory_rate);
  const std::size_t c_temp = require(schema.temperature_c);
  const std::size_t c_ams = require(schema.altered_mental_status);
  const std::size_t c_cancer = require(schema.cancer);
  const std::size_t c_hf = require(schema.heart_failure);
  const std::size_t c_cld = require(schema.chronic_lung_disease);
  const std::size_t c_o2 = require(schema.o2_sat);
  const std::size_t c_event = require(schema.event);
  const std::size_t c_time = require(schema.time_days);
  const auto c_rv = table.column(schema.rv_dysfunction);

  Dataset ds;
  ds.records.reserve(table.rows.size());
  std::unordered_set<std::string> seen;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const csv::Row& row = table.rows[r];
    const std::string where = row_context(r, table.line_numbers[r]);
    if (row.size() != table.header.size()) {
      fail(ErrorKind::MalformedRow, where + ": expected " + std::to_string(table.header.size()) +
                                        " fields, found " + std::to_string(row.size()));
    }

    PatientRecord rec;
    rec.patient_id = row[c_id];
    if (rec.patient_id.empty()) fail(ErrorKind::MalformedRow, where + ": empty patient_id");
    if (!seen.insert(rec.patient_id).second) {
      fail(ErrorKind::DuplicatePatientId, rec.patient_id + " at " + where);
    }

    ClinicalVariables& clin = rec.clinical;
    if (const auto age = csv::parse_double(row[c_age]); age && *age > 0.0) {
      clin.age_years = *age;
    } else {
      clin.age_years = std::numeric_limits<double>::quiet_NaN();
      clin.missing[0] = true;
    }

    auto set_binary = [&](BinaryVar v, std::optional<bool> value) {
      if (value) {
        clin.set_flag(v, *value);
      } else {
        clin.set_flag(v, false);
        clin.missing[1 + static_cast<std::size_t>(v)] = true;
      }
    };
    auto threshold = [](std::optional<double> value, auto pred) -> std::optional<bool> {
      if (!value) return std::nullopt;
      return pred(*value);
    };

    set_binary(BinaryVar::Male, parse_sex_male(row[c_sex]));
    set_binary(BinaryVar::Cancer, csv::parse_bool(row[c_cancer]));
    set_binary(BinaryVar::HeartFailure, csv::parse_bool(row[c_hf]));
    set_binary(BinaryVar::ChronicLungDisease, csv::parse_bool(row[c_cld]));
    set_binary(BinaryVar::HrGe110, threshold(csv::parse_double(row[c_hr]),
                                             [&](double x) { return x >= vt.heart_rate_ge; }));
    set_binary(BinaryVar::SbpLt100, threshold(csv::parse_double(row[c_sbp]),
                                              [&](double x) { return x < vt.systolic_bp_lt; }));
    set_binary(BinaryVar::RrGe30, threshold(csv::parse_double(row[c_rr]),
                                            [&](double x) { return x >= vt.respiratory_rate_ge; }));
    set_binary(BinaryVar::TempLt36c, threshold(csv::parse_double(row[c_temp]),
                                               [&](double x) { return x < vt.temperature_lt; }));
    set_binary(BinaryVar::AlteredMentalStatus, csv::parse_bool(row[c_ams]));
    set_binary(BinaryVar::O2SatLt90, threshold(csv::parse_double(row[c_o2]),
                                               [&](double x) { return x < vt.o2_sat_lt; }));

    const auto event = csv::parse_bool(row[c_event]);
    if (!event) fail(ErrorKind::MalformedRow, where + ": event must be 0/1, got '" + row[c_event] + "'");
    const auto time = csv::parse_double(row[c_time]);
    if (!time || *time < 0.0) {
      fail(ErrorKind::MalformedRow,
           where + ": time_days must be a non-negative number, got '" + row[c_time] + "'");
    }
    rec.label = {*event, *time};

    if (c_rv) {
      if (const auto rv = csv::parse_bool(row[*c_rv])) rec.rv_dysfunction = *rv;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

Acquisition aggregate_acquisitions(std::span<const Acquisition> windows) {
  if (windows.empty()) fail(ErrorKind::EmptyWindowList, "no acquisitions to aggregate");
  const std::size_t dim = windows.front().features.size();
  std::size_t best = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].features.size() != dim) {
      fail(ErrorKind::InconsistentDimension,
           "window " + std::to_string(i) + " has " + std::to_string(windows[i].features.size()) +
               " features, expected " + std::to_string(dim));
    }
    if (windows[i].pe_probability > windows[best].pe_probability) best = i;
  }
  return windows[best];
}

FeatureTable ingest_features(const std::filesystem::path& csv_path) {
  const csv::Table table = csv::read_file(csv_path);
  const auto c_id = table.column("patient_id");
  if (!c_id) fail(ErrorKind::MissingColumn, "patient_id");
  const auto c_acq = table.column("acquisition_id");
  if (!c_acq) fail(ErrorKind::MissingColumn, "acquisition_id");
  const auto c_prob = table.column("pe_probability");
  if (!c_prob) fail(ErrorKind::MissingColumn, "pe_probability");

  std::vector<std::size_t> feature_cols;
  for (std::size_t k = 0;; ++k) {
    const auto c = table.column("f" + std::to_string(k));
    if (!c) break;
    feature_cols.push_back(*c);
  }
  if (feature_cols.empty()) fail(ErrorKind::MissingColumn, "f0");

  // Acquisitions are grouped per patient in file order so ties resolve to the
  // first row seen.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Acquisition>> windows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const csv::Row& row = table.rows[r];
    const std::string where = row_context(r, table.line_numbers[r]);
    if (row.size() != table.header.size()) {
      fail(ErrorKind::MalformedRow, where + ": expected " + std::to_string(table.header.size()) +
                                        " fields, found " + std::to_string(row.size()));
    }
    Acquisition acq;
    const auto prob = csv::parse_double(row[*c_prob]);
    if (!prob || *prob < 0.0 || *prob > 1.0) {
      fail(ErrorKind::MalformedRow, where + ": pe_probability must lie in [0,1]");
    }
    acq.pe_probability = *prob;
    acq.features.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto v = csv::parse_double(row[feature_cols[k]]);
      if (!v) fail(ErrorKind::MalformedRow, where + ": feature f" + std::to_string(k) + " is missing");
      acq.features.push_back(*v);
    }
    const std::string& id = row[*c_id];
    if (id.empty()) fail(ErrorKind::MalformedRow, where + ": empty patient_id");
    auto [it, inserted] = windows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(std::move(acq));
  }

  FeatureTable out;
  out.dim = feature_cols.size();
  for (const auto& id : order) out.by_patient.emplace(id, aggregate_acquisitions(windows.at(id)));
  return out;
}

void attach_features(Dataset& ds, const FeatureTable& table) {
  ds.feature_dim = table.dim;
  for (auto& rec : ds.records) {
    const auto it = table.by_patient.find(rec.patient_id);
    if (it != table.by_patient.end()) rec.imaging_features = it->second.features;
  }
}

ImputationParams fit_imputation(const Dataset& ds, std::span<const std::string> reference_ids) {
  if (reference_ids.empty()) fail(ErrorKind::InvalidInput, "imputation reference set is empty");
  const Dataset ref = ds.subset(reference_ids);

  ImputationParams params;
  for (std::size_t k = 0; k < kBinaryVarCount; ++k) {
    std::size_t observed = 0;
    std::size_t ones = 0;
    for (const auto& r : ref.records) {
      if (r.clinical.missing[1 + k]) continue;
      ++observed;
      if (r.clinical.flags[k]) ++ones;
    }
    if (observed == 0) fail(ErrorKind::AllMissingColumn, kClinicalVarNames[1 + k]);
    // Median of a 0/1 sample is 1 only when ones are a strict majority; an
    // even split gives 0.5, which imputes false.
    params.binary_fill[k] = 2 * ones > observed;
  }

  std::vector<double> ages;
  for (const auto& r : ref.records) {
    if (!r.clinical.age_missing()) ages.push_back(r.clinical.age_years);
  }
  if (ages.empty()) fail(ErrorKind::AllMissingColumn, "age");
  std::sort(ages.begin(), ages.end());
  const std::size_t m = ages.size();
  params.age_fill = m % 2 == 1 ? ages[m / 2] : 0.5 * (ages[m / 2 - 1] + ages[m / 2]);

  // Mean and population sd over the reference ages after filling, so that
  // re-imputing an imputed dataset reproduces the same constants.
  const std::size_t filled_missing = ref.records.size() - m;
  const double n = static_cast<double>(ref.records.size());
  double sum = std::accumulate(ages.begin(), ages.end(), 0.0) +
               static_cast<double>(filled_missing) * params.age_fill;
  const double mean = sum / n;
  double ss = 0.0;
  for (double a : ages) ss += (a - mean) * (a - mean);
  ss += static_cast<double>(filled_missing) * (params.age_fill - mean) * (params.age_fill - mean);
  const double sd = std::sqrt(ss / n);
  params.age_norm = {mean, sd > 0.0 ? sd : 1.0};
  return params;
}

Dataset apply_imputation(const Dataset& ds, const ImputationParams& params) {
  Dataset out = ds;
  for (auto& rec : out.records) {
    ClinicalVariables& clin = rec.clinical;
    if (clin.missing[0]) clin.age_years = params.age_fill;
    for (std::size_t k = 0; k < kBinaryVarCount; ++k) {
      if (clin.missing[1 + k]) clin.flags[k] = params.binary_fill[k];
    }
    clin.missing.fill(false);
  }
  out.age_norm_params = params.age_norm;
  return out;
}

Dataset impute_missing(const Dataset& ds, std::span<const std::string> reference_ids) {
  return apply_imputation(ds, fit_imputation(ds, reference_ids));
}

std::array<double, kClinicalVarCount> clinical_feature_vector(const PatientRecord& rec,
                                                              const NormParams& params) {
  if (!rec.clinical.fully_observed()) {
    fail(ErrorKind::UnimputedRecord, rec.patient_id + " still has missing clinical values");
  }
  std::array<double, kClinicalVarCount> v{};
  v[0] = (rec.clinical.age_years - params.mean) / params.sd;
  for (std::size_t k = 0; k < kBinaryVarCount; ++k) v[1 + k] = rec.clinical.flags[k] ? 1.0 : 0.0;
  return v;
}

Eigen::MatrixXd clinical_matrix(const Dataset& ds, const NormParams& params) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(kClinicalVarCount));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto v = clinical_feature_vector(ds.records[i], params);
    for (std::size_t k = 0; k < kClinicalVarCount; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
    }
  }
  return x;
}

Eigen::MatrixXd imaging_matrix(const Dataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.feature_dim));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& rec = ds.records[i];
    if (!rec.imaging_features) {
      fail(ErrorKind::InvalidInput, "patient " + rec.patient_id + " has no imaging features");
    }
    if (rec.imaging_features->size() != ds.feature_dim) {
      fail(ErrorKind::InconsistentDimension, "patient " + rec.patient_id + " feature length " +
                                                 std::to_string(rec.imaging_features->size()));
    }
    for (std::size_t k = 0; k < ds.feature_dim; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (*rec.imaging_features)[k];
    }
  }
  return x;
}

std::vector<double> normalize_volume(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::EmptyArray, "volume has no voxels");
  constexpr double kLowHu = -1000.0;
  constexpr double kHighHu = 900.0;
  std::vector<double> out(values.begin(), values.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::clamp(v, kLowHu, kHighHu);
    sum += v;
  }
  const double mean = sum / static_cast<double>(out.size());
  for (double& v : out) v -= mean;
  return out;
}

SplitAssignment split_dataset(const Dataset& ds, std::uint64_t seed, const SplitRatios& ratios) {
  const std::size_t n = ds.size();
  if (n < 10) fail(ErrorKind::DatasetTooSmall, "need at least 10 patients, have " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  // The epsilon absorbs representation error such as 0.7 * 10 = 7.000000000000001
  // or 0.1 * 30 slightly below 3.
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n) + 1e-9));
  if (n_train + n_val > n) fail(ErrorKind::InvalidInput, "split ratios exceed the dataset size");

  auto collect = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> ids;
    ids.reserve(idx.size());
    for (auto i : idx) ids.push_back(ds.records[i].patient_id);
    return ids;
  };

  SplitAssignment split;
  split.seed = seed;
  split.train_ids = collect(0, n_train);
  split.val_ids = collect(n_train, n_train + n_val);
  split.test_ids = collect(n_train + n_val, n);
  return split;
}

std::vector<SurvivalLabel> truncate_labels(std::span<const SurvivalLabel> labels, double horizon) {
  std::vector<SurvivalLabel> out(labels.begin(), labels.end());
  for (auto& l : out) {
    if (l.time_days > horizon) l = {false, horizon};
  }
  return out;
}

std::vector<SurvivalLabel> truncate_30day(std::span<const SurvivalLabel> labels) {
  return truncate_labels(labels, kShortTermHorizonDays);
}

}  // namespace survfuse
