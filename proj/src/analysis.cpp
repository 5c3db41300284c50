#include "survfuse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "survfuse/error.hpp"
#include "survfuse/pesi.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

RiskStrata stratify(std::span<const double> scores, std::span<const std::string> ids,
                    const StratifyOptions& options) {
  if (scores.empty()) fail(ErrorKind::EmptyInput, "nothing to stratify");
  if (scores.size() != ids.size()) fail(ErrorKind::MismatchedLengths, "scores and ids differ in length");

  RiskStrata strata;
  strata.method = options.method;
  if (options.method == StratifyMethod::Median) {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    strata.cut_value = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  } else {
    strata.cut_value = options.threshold;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (scores[i] >= strata.cut_value ? strata.high_ids : strata.low_ids).push_back(ids[i]);
  }
  return strata;
}

RvFactorReport rv_factor_analysis(const RiskStrata& strata,
                                  const std::unordered_map<std::string, bool>& rv_flags,
                                  const std::unordered_map<std::string, bool>& death_flags) {
  RvFactorReport report;
  auto visit = [&](const std::vector<std::string>& ids, bool high) {
    for (const auto& id : ids) {
      const auto rv = rv_flags.find(id);
      const auto death = death_flags.find(id);
      if (rv == rv_flags.end() || death == death_flags.end()) {
        fail(ErrorKind::InvalidInput, "no RV/death flag for patient " + id);
      }
      if (rv->second) {
        ++report.n_rv;
        report.rv_high += high;
      }
      if (death->second) {
        ++report.n_deaths;
        report.deaths_high += high;
      }
    }
  };
  visit(strata.high_ids, true);
  visit(strata.low_ids, false);

  if (report.n_rv > 0) {
    report.rv_high_pct = 100.0 * static_cast<double>(report.rv_high) / static_cast<double>(report.n_rv);
  } else {
    report.signals.push_back(ErrorKind::NoRvPatients);
  }
  if (report.n_deaths > 0) {
    report.mortality_classification_accuracy =
        100.0 * static_cast<double>(report.deaths_high) / static_cast<double>(report.n_deaths);
  } else {
    report.signals.push_back(ErrorKind::NoDeaths);
  }
  return report;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", std::round(value * 10.0) / 10.0);
  return buf;
}

PesiComparison compare_samples(double model_c_index, double pesi_c_index, std::span<const double> model_samples,
                               std::span<const double> pesi_samples) {
  if (model_samples.size() != pesi_samples.size() || model_samples.empty()) {
    fail(ErrorKind::MismatchedLengths, "paired resample vectors must be non-empty and equally long");
  }
  PesiComparison out;
  out.model_c_index = model_c_index;
  out.pesi_c_index = pesi_c_index;
  std::vector<double> diffs(model_samples.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < diffs.size(); ++r) {
    diffs[r] = model_samples[r] - pesi_samples[r];
    sum += diffs[r];
  }
  out.mean_difference = sum / static_cast<double>(diffs.size());
  try {
    out.test = wilcoxon_signed_rank(diffs);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TooFewPairs) throw;
    out.no_difference = true;
  }
  return out;
}

PesiComparison compare_to_pesi(std::span<const double> model_scores, std::span<const double> pesi_scores,
                               std::span<const SurvivalLabel> labels, const BootstrapOptions& options) {
  const PairedSamples samples = paired_bootstrap_samples(c_index, model_scores, pesi_scores, labels, options);
  return compare_samples(c_index(model_scores, labels), c_index(pesi_scores, labels), samples.a, samples.b);
}

std::string_view to_string(StudyModel m) noexcept {
  switch (m) {
    case StudyModel::Pesi: return "pesi";
    case StudyModel::RsfFused: return "rsf_fused";
    case StudyModel::DeepImaging: return "deep_imaging";
    case StudyModel::DeepClinical: return "deep_clinical";
    case StudyModel::DeepMultimodal: return "deep_multimodal";
    case StudyModel::DeepPesiFused: return "deep_pesi_fused";
  }
  return "?";
}

std::optional<StudyModel> parse_study_model(std::string_view s) noexcept {
  for (StudyModel m : kAllStudyModels) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

bool uses_imaging(StudyModel m) noexcept {
  return m == StudyModel::RsfFused || m == StudyModel::DeepImaging || m == StudyModel::DeepMultimodal ||
         m == StudyModel::DeepPesiFused;
}

bool is_linear_predictor(StudyModel m) noexcept {
  return m == StudyModel::RsfFused || m == StudyModel::DeepMultimodal || m == StudyModel::DeepPesiFused;
}

Dataset preprocess(const Dataset& ds, const Preprocessing& prep) {
  return apply_imputation(ds, prep.imputation);
}

Eigen::MatrixXd scaled_imaging_matrix(const Dataset& preprocessed, const Preprocessing& prep) {
  if (preprocessed.feature_dim != prep.feature_dim) {
    fail(ErrorKind::SchemaMismatch, "imaging features have dimension " + std::to_string(preprocessed.feature_dim) +
                                        ", model expects " + std::to_string(prep.feature_dim));
  }
  Eigen::MatrixXd x = imaging_matrix(preprocessed);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    x.col(k) = (x.col(k).array() - prep.imaging_mean[kk]) / prep.imaging_sd[kk];
  }
  return x;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

template <typename T>
const T& require_component(const std::optional<T>& component, const char* name) {
  if (!component) fail(ErrorKind::UnknownModelKind, std::string("artifact lacks component ") + name);
  return *component;
}

std::vector<double> modality_scores(const StudyArtifacts& a, Modality m, const Dataset& prep) {
  const NormParams age = a.preprocessing.imputation.age_norm;
  switch (m) {
    case Modality::Clin:
      return to_std(forward(require_component(a.clin_mlp, "clin_mlp"), clinical_matrix(prep, age)));
    case Modality::Img:
      return to_std(forward(require_component(a.img_mlp, "img_mlp"), scaled_imaging_matrix(prep, a.preprocessing)));
    case Modality::RsfClin:
      return predict_risk(require_component(a.rsf_clin, "rsf_clin"), clinical_matrix(prep, age));
    case Modality::RsfImg:
      return predict_risk(require_component(a.rsf_img, "rsf_img"), scaled_imaging_matrix(prep, a.preprocessing));
    case Modality::Pesi:
      return pesi_predictor(prep);
  }
  return {};
}

std::vector<double> fused_scores(const StudyArtifacts& a, const FusionModel& fusion, const Dataset& prep) {
  ModalityScores inputs;
  for (Modality m : fusion.covariate_sources) inputs[m] = modality_scores(a, m, prep);
  return predict_fused(fusion, inputs);
}

}  // namespace

std::vector<double> score_model(const StudyArtifacts& artifacts, StudyModel model, const Dataset& raw) {
  const Dataset prep = preprocess(raw, artifacts.preprocessing);
  switch (model) {
    case StudyModel::Pesi:
      return modality_scores(artifacts, Modality::Pesi, prep);
    case StudyModel::DeepClinical:
      return modality_scores(artifacts, Modality::Clin, prep);
    case StudyModel::DeepImaging:
      return modality_scores(artifacts, Modality::Img, prep);
    case StudyModel::DeepMultimodal:
      return fused_scores(artifacts, require_component(artifacts.multimodal, "multimodal"), prep);
    case StudyModel::DeepPesiFused:
      return fused_scores(artifacts, require_component(artifacts.pesi_fused, "pesi_fused"), prep);
    case StudyModel::RsfFused:
      return fused_scores(artifacts, require_component(artifacts.rsf_fused, "rsf_fused"), prep);
  }
  return {};
}

namespace {

template <typename F>
auto run_stage(const std::string& stage, F&& body) {
  spdlog::info("stage {}", stage);
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

bool needs_imaging(const std::vector<StudyModel>& models) {
  return std::any_of(models.begin(), models.end(), uses_imaging);
}

bool wants(const std::vector<StudyModel>& models, StudyModel m) {
  return std::find(models.begin(), models.end(), m) != models.end();
}

Dataset load_cohort(const std::filesystem::path& clinical, const std::filesystem::path& features,
                    bool imaging, const char* which) {
  Dataset ds = ingest_clinical(clinical);
  if (imaging) {
    if (features.empty()) {
      fail(ErrorKind::InvalidConfig, std::string(which) + " features CSV is required by the requested imaging models");
    }
    attach_features(ds, ingest_features(features));
    std::size_t missing = 0;
    for (const auto& r : ds.records) missing += !r.imaging_features.has_value();
    if (missing > 0) {
      fail(ErrorKind::InvalidInput,
           std::to_string(missing) + " " + which + " patients have no imaging features");
    }
  }
  return ds;
}

struct EvalSplit {
  std::string name;
  Dataset raw;
};

struct SplitScores {
  std::map<StudyModel, std::vector<double>> by_model;
};

std::vector<StudyModel> required_models(const std::vector<StudyModel>& requested) {
  std::vector<StudyModel> out{StudyModel::Pesi};
  for (StudyModel m : requested) {
    if (!wants(out, m)) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool has_comparable_pair(std::span<const SurvivalLabel> labels) {
  double first_event = std::numeric_limits<double>::infinity();
  double last_time = -std::numeric_limits<double>::infinity();
  for (const auto& l : labels) {
    if (l.event) first_event = std::min(first_event, l.time_days);
    last_time = std::max(last_time, l.time_days);
  }
  return first_event < last_time;
}

void evaluate_horizon(const std::string& horizon, const std::vector<EvalSplit>& splits,
                      const std::vector<SplitScores>& scores, const std::vector<StudyModel>& models,
                      const std::function<std::vector<SurvivalLabel>(const Dataset&)>& label_fn,
                      const StudyConfig& config, std::uint64_t seed_stream, std::vector<SplitEval>& evals,
                      std::vector<ComparisonEntry>& comparisons) {
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const std::vector<SurvivalLabel> labels = label_fn(splits[s].raw);
    if (!has_comparable_pair(labels)) {
      spdlog::warn("{} split '{}' has no comparable pairs; skipped", horizon, splits[s].name);
      continue;
    }
    BootstrapOptions boot;
    boot.n_resamples = config.bootstrap_resamples;
    boot.seed = derive_seed(config.seed, seed_stream + s);

    const auto& by_model = scores[s].by_model;
    const std::vector<double> pesi_samples =
        bootstrap_samples(c_index, by_model.at(StudyModel::Pesi), labels, boot);
    const double pesi_c = c_index(by_model.at(StudyModel::Pesi), labels);

    SplitEval eval;
    eval.split = splits[s].name;
    eval.n = labels.size();
    eval.n_events = static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.event; }));
    for (StudyModel m : models) {
      const auto& sc = by_model.at(m);
      std::vector<double> samples =
          m == StudyModel::Pesi ? pesi_samples : bootstrap_samples(c_index, sc, labels, boot);
      ModelEval me;
      me.model = m;
      me.c_index = c_index(sc, labels);
      if (m != StudyModel::Pesi) {
        comparisons.push_back({eval.split, horizon, m, compare_samples(me.c_index, pesi_c, samples, pesi_samples)});
      }
      std::sort(samples.begin(), samples.end());
      me.ci = {percentile_sorted(samples, 0.025), percentile_sorted(samples, 0.975)};
      eval.models.push_back(me);
    }
    evals.push_back(std::move(eval));
  }
}

std::vector<double> probability_scale(StudyModel m, const std::vector<double>& scores) {
  return is_linear_predictor(m) ? sigmoid(scores) : scores;
}

std::optional<NriEntry> nri_entry(const std::string& label, StudyModel old_model, StudyModel new_model,
                                  const SplitScores& scores, std::span<const SurvivalLabel> labels,
                                  const StudyConfig& config, std::uint64_t seed) {
  const auto old_p = probability_scale(old_model, scores.by_model.at(old_model));
  const auto new_p = probability_scale(new_model, scores.by_model.at(new_model));
  NriEntry entry;
  entry.label = label;
  entry.old_model = old_model;
  entry.new_model = new_model;
  try {
    entry.result = nri(old_p, new_p, labels, config.nri_threshold);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoEvents && e.kind() != ErrorKind::NoNonevents) throw;
    return std::nullopt;
  }

  BootstrapOptions boot;
  boot.n_resamples = config.bootstrap_resamples;
  boot.seed = seed;
  const BootstrapSampler sampler(labels.size(), boot);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(boot.n_resamples));
  std::vector<double> o(labels.size());
  std::vector<double> nw(labels.size());
  std::vector<SurvivalLabel> l(labels.size());
  for (int r = 0; r < boot.n_resamples; ++r) {
    bool done = false;
    for (int attempt = 0; attempt <= boot.max_retries && !done; ++attempt) {
      const auto idx = sampler.draw(r, attempt);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        o[k] = old_p[idx[k]];
        nw[k] = new_p[idx[k]];
        l[k] = labels[idx[k]];
      }
      try {
        values.push_back(nri(o, nw, l, config.nri_threshold).nri);
        done = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoEvents && e.kind() != ErrorKind::NoNonevents) throw;
      }
    }
    if (!done) fail(ErrorKind::DegenerateResampling, "NRI resample stayed undefined");
  }
  std::sort(values.begin(), values.end());
  entry.ci = {percentile_sorted(values, 0.025), percentile_sorted(values, 0.975)};
  return entry;
}

std::vector<SurvivalLabel> labels_for(const Dataset& ds, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, SurvivalLabel> by_id;
  for (const auto& r : ds.records) by_id.emplace(r.patient_id, r.label);
  std::vector<SurvivalLabel> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(by_id.at(id));
  return out;
}

Preprocessing fit_preprocessing(const Dataset& internal, const SplitAssignment& split, bool imaging) {
  Preprocessing prep;
  prep.imputation = fit_imputation(internal, split.train_ids);
  prep.feature_dim = internal.feature_dim;
  if (imaging) {
    const Eigen::MatrixXd x = imaging_matrix(internal.subset(split.train_ids));
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      const double mean = x.col(k).mean();
      const double sd = std::sqrt((x.col(k).array() - mean).square().sum() / n);
      prep.imaging_mean.push_back(mean);
      prep.imaging_sd.push_back(sd > 0.0 ? sd : 1.0);
    }
  }
  return prep;
}

}  // namespace

StudyData load_study_data(const StudyConfig& config) {
  return run_stage("ingest", [&] {
    const bool imaging = needs_imaging(config.models);
    StudyData data;
    data.internal = load_cohort(config.clinical_csv, config.features_csv, imaging, "internal");
    if (!config.external_clinical_csv.empty()) {
      data.external = load_cohort(config.external_clinical_csv, config.external_features_csv, imaging, "external");
    }
    return data;
  });
}

StudyResult run_study(const StudyConfig& config) { return run_study(config, load_study_data(config)); }

StudyResult run_study(const StudyConfig& config, const StudyData& data) {
  const std::vector<StudyModel>& models = config.models;
  if (models.empty()) throw StageError("config", Error(ErrorKind::InvalidConfig, "no models requested"));
  const bool imaging = needs_imaging(models);
  const bool need_clin_mlp = wants(models, StudyModel::DeepClinical) || wants(models, StudyModel::DeepMultimodal) ||
                             wants(models, StudyModel::DeepPesiFused);
  const bool need_img_mlp = wants(models, StudyModel::DeepImaging) || wants(models, StudyModel::DeepMultimodal) ||
                            wants(models, StudyModel::DeepPesiFused);

  StudyResult result;
  StudyArtifacts& art = result.artifacts;

  const SplitAssignment split =
      run_stage("split", [&] { return split_dataset(data.internal, derive_seed(config.seed, 1), config.split); });
  art.preprocessing = run_stage("impute", [&] { return fit_preprocessing(data.internal, split, imaging); });

  const Dataset train_raw = data.internal.subset(split.train_ids);
  const Dataset val_raw = data.internal.subset(split.val_ids);
  const Dataset train = preprocess(train_raw, art.preprocessing);
  const Dataset val = preprocess(val_raw, art.preprocessing);
  const std::vector<SurvivalLabel> train_labels = train.labels();
  const std::vector<SurvivalLabel> val_labels = val.labels();
  const NormParams age = art.preprocessing.imputation.age_norm;

  if (need_clin_mlp) {
    art.clin_mlp = run_stage("train_deep_clinical", [&] {
      TrainConfig cfg = config.deep_clinical;
      cfg.seed = derive_seed(config.seed, 2);
      const Eigen::MatrixXd x = clinical_matrix(train, age);
      const MlpSurvModel init = init_model(x.cols(), cfg, Modality::Clin);
      return survfuse::train(init, x, train_labels, clinical_matrix(val, age), val_labels, cfg).model;
    });
  }
  if (need_img_mlp) {
    art.img_mlp = run_stage("train_deep_imaging", [&] {
      TrainConfig cfg = config.deep_imaging;
      cfg.seed = derive_seed(config.seed, 3);
      const Eigen::MatrixXd x = scaled_imaging_matrix(train, art.preprocessing);
      const MlpSurvModel init = init_model(x.cols(), cfg, Modality::Img);
      return survfuse::train(init, x, train_labels, scaled_imaging_matrix(val, art.preprocessing), val_labels, cfg)
          .model;
    });
  }
  if (wants(models, StudyModel::DeepMultimodal)) {
    art.multimodal = run_stage("fuse_multimodal", [&] {
      ModalityScores s{{Modality::Clin, modality_scores(art, Modality::Clin, train)},
                       {Modality::Img, modality_scores(art, Modality::Img, train)}};
      return fit_fusion(s, train_labels);
    });
  }
  if (wants(models, StudyModel::DeepPesiFused)) {
    art.pesi_fused = run_stage("fuse_pesi", [&] {
      ModalityScores s{{Modality::Clin, modality_scores(art, Modality::Clin, train)},
                       {Modality::Img, modality_scores(art, Modality::Img, train)},
                       {Modality::Pesi, modality_scores(art, Modality::Pesi, train)}};
      return fit_fusion(s, train_labels);
    });
  }
  if (wants(models, StudyModel::RsfFused)) {
    run_stage("rsf", [&] {
      RsfParams p = config.rsf;
      p.seed = derive_seed(config.seed, 4);
      art.rsf_clin = fit_forest(clinical_matrix(train, age), train_labels, p);
      p.seed = derive_seed(config.seed, 5);
      art.rsf_img = fit_forest(scaled_imaging_matrix(train, art.preprocessing), train_labels, p);
      ModalityScores s{{Modality::RsfClin, modality_scores(art, Modality::RsfClin, train)},
                       {Modality::RsfImg, modality_scores(art, Modality::RsfImg, train)}};
      art.rsf_fused = fit_fusion(s, train_labels);
      return 0;
    });
  }

  std::vector<EvalSplit> splits;
  splits.push_back({"train", train_raw});
  splits.push_back({"val", val_raw});
  splits.push_back({"test", data.internal.subset(split.test_ids)});
  if (data.external) splits.push_back({"external", *data.external});

  const std::vector<StudyModel> scored = required_models(models);
  const std::vector<SplitScores> scores = run_stage("score", [&] {
    std::vector<SplitScores> out(splits.size());
    for (std::size_t s = 0; s < splits.size(); ++s) {
      for (StudyModel m : scored) out[s].by_model[m] = score_model(art, m, splits[s].raw);
    }
    return out;
  });

  StudyReport& report = result.report;
  run_stage("evaluate", [&] {
    evaluate_horizon("overall", splits, scores, models, [](const Dataset& d) { return d.labels(); }, config, 1000,
                     report.overall, report.comparisons);
    if (config.short_term) {
      std::vector<StudyModel> short_models;
      for (StudyModel m : models) {
        if (m != StudyModel::RsfFused) short_models.push_back(m);
      }
      evaluate_horizon("short_term", splits, scores, short_models,
                       [](const Dataset& d) {
                         const auto l = d.labels();
                         return truncate_30day(l);
                       },
                       config, 2000, report.short_term, report.comparisons);
    }
    return 0;
  });

  run_stage("nri", [&] {
    struct Pair {
      const char* label;
      StudyModel old_model;
      StudyModel new_model;
    };
    const Pair pairs[] = {{"+Clinical", StudyModel::DeepImaging, StudyModel::DeepMultimodal},
                          {"+Imaging", StudyModel::DeepClinical, StudyModel::DeepMultimodal},
                          {"+PESI", StudyModel::DeepMultimodal, StudyModel::DeepPesiFused}};
    for (std::size_t s = 0; s < splits.size(); ++s) {
      const std::vector<SurvivalLabel> labels = splits[s].raw.labels();
      SplitNri split_nri;
      split_nri.split = splits[s].name;
      for (std::size_t k = 0; k < std::size(pairs); ++k) {
        if (!wants(models, pairs[k].old_model) || !wants(models, pairs[k].new_model)) continue;
        auto entry = nri_entry(pairs[k].label, pairs[k].old_model, pairs[k].new_model, scores[s], labels, config,
                               derive_seed(config.seed, 3000 + 10 * s + k));
        if (entry) split_nri.entries.push_back(std::move(*entry));
      }
      report.nri.push_back(std::move(split_nri));
    }
    return 0;
  });

  run_stage("km", [&] {
    auto it = std::find_if(splits.begin(), splits.end(), [&](const EvalSplit& s) { return s.name == config.km_split; });
    if (it == splits.end()) fail(ErrorKind::InvalidConfig, "unknown km_split '" + config.km_split + "'");
    const std::size_t s = static_cast<std::size_t>(it - splits.begin());
    const std::vector<std::string> ids = it->raw.ids();
    for (StudyModel m : models) {
      const RiskStrata strata = stratify(scores[s].by_model.at(m), ids, config.stratification);
      KmEntry entry;
      entry.model = m;
      entry.split = it->name;
      entry.cut_value = strata.cut_value;
      const auto high_labels = labels_for(it->raw, strata.high_ids);
      const auto low_labels = labels_for(it->raw, strata.low_ids);
      if (!high_labels.empty()) entry.high = km_curve(high_labels, "high");
      if (!low_labels.empty()) entry.low = km_curve(low_labels, "low");
      entry.high.group_label = "high";
      entry.low.group_label = "low";
      const bool any_event = std::any_of(high_labels.begin(), high_labels.end(), [](auto& l) { return l.event; }) ||
                             std::any_of(low_labels.begin(), low_labels.end(), [](auto& l) { return l.event; });
      if (!high_labels.empty() && !low_labels.empty() && any_event) {
        entry.logrank = logrank_test(high_labels, low_labels);
      }
      report.km.push_back(std::move(entry));
    }
    return 0;
  });

  if (wants(models, StudyModel::DeepMultimodal)) {
    run_stage("rv", [&] {
      const EvalSplit& target = splits.back().name == "external" ? splits.back() : splits[2];
      const bool any_flag = std::any_of(target.raw.records.begin(), target.raw.records.end(),
                                        [](const auto& r) { return r.rv_dysfunction.has_value(); });
      if (!any_flag) return 0;
      const std::size_t s = static_cast<std::size_t>(&target - splits.data());
      const auto& lp = scores[s].by_model.at(StudyModel::DeepMultimodal);
      const std::vector<std::string> ids = target.raw.ids();
      // The factor-risk analysis always splits at the median predicted risk.
      const RiskStrata strata = stratify(lp, ids, {StratifyMethod::Median, 0.0});
      std::unordered_map<std::string, bool> rv;
      std::unordered_map<std::string, bool> death;
      for (const auto& r : target.raw.records) {
        rv[r.patient_id] = r.rv_dysfunction.value_or(false);
        death[r.patient_id] = r.label.event;
      }
      RvSection section;
      section.split = target.name;
      section.cut_value = strata.cut_value;
      section.report = rv_factor_analysis(strata, rv, death);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& r = target.raw.records[i];
        section.patients.push_back({r.patient_id, lp[i], sigmoid(lp[i]), r.rv_dysfunction.value_or(false),
                                    r.label.event, lp[i] >= strata.cut_value});
      }
      report.rv_analysis = std::move(section);
      return 0;
    });
  }

  if (art.clin_mlp) {
    FeatureAnalysis fa;
    for (const char* name : kClinicalVarNames) fa.names.emplace_back(name);
    fa.importance = feature_importance(*art.clin_mlp);
    for (std::size_t k = 0; k < kClinicalVarCount; ++k) {
      try {
        fa.predictive_ability.emplace_back(predictive_ability(train, k));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConstantVariable && e.kind() != ErrorKind::NoComparablePairs) throw;
        fa.predictive_ability.emplace_back(std::nullopt);
      }
    }
    report.clinical_features = std::move(fa);
  }
  return result;
}

}  // namespace survfuse
