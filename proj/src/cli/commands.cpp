#include "survfuse/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "survfuse/cli/artifacts.hpp"
#include "survfuse/cli/report.hpp"
#include "survfuse/csv.hpp"
#include "survfuse/error.hpp"
#include "survfuse/pesi.hpp"
#include "survfuse/rng.hpp"
#include "survfuse/synthetic.hpp"

namespace survfuse::cli {

using nlohmann::json;

GenerateOutputs cmd_generate(const GeneratorConfig& gen, const std::filesystem::path& out_dir) {
  auto make_spec = [&](std::size_t n, std::uint64_t seed) {
    GeneratorSpec spec;
    spec.n = n;
    spec.seed = seed;
    spec.baseline_rate = gen.baseline_rate;
    spec.censor_rate = gen.censor_rate;
    ModalityPlan plan;
    plan.img_dim = gen.img_dim;
    plan.latent_weights = gen.latent_weights;
    plan.missing_fraction = gen.missing_fraction;
    plan.max_acquisitions = gen.max_acquisitions;
    spec.modality_plan = plan;
    return spec;
  };

  GenerateOutputs out;
  try {
    out.clinical = out_dir / "clinical.csv";
    out.features = out_dir / "features.csv";
    const MultimodalSample internal = gen_multimodal(make_spec(gen.n, gen.seed));
    write_clinical_csv(internal, out.clinical);
    write_features_csv(internal, out.features);
    if (gen.n_external > 0) {
      MultimodalSample external = gen_multimodal(make_spec(gen.n_external, derive_seed(gen.seed, 1)));
      // A distinct id prefix keeps the two cohorts apart when files are mixed up.
      for (auto& r : external.dataset.records) r.patient_id[0] = 'E';
      out.external_clinical = out_dir / "external_clinical.csv";
      out.external_features = out_dir / "external_features.csv";
      write_clinical_csv(external, *out.external_clinical);
      write_features_csv(external, *out.external_features);
    }
  } catch (const std::filesystem::filesystem_error& e) {
    fail(ErrorKind::IoError, e.what());
  }
  return out;
}

StudyResult cmd_run(const StudyConfig& config) {
  const StudyData data = load_study_data(config);
  StudyResult result = run_study(config, data);
  result.report.config_fingerprint = config_fingerprint(config);

  const std::filesystem::path& out = config.output_dir;
  try {
    std::filesystem::create_directories(out);
    const json report = report_to_json(result.report);
    write_text_file(out / "report.json", report.dump(2) + "\n");
    if (result.report.clinical_features) {
      write_text_file(out / "feature_analysis.json",
                      feature_analysis_to_json(*result.report.clinical_features).dump(2) + "\n");
    }
    write_km_files(report, out);

    ArtifactMetadata meta;
    meta.seed = config.seed;
    meta.data_fingerprint = data_fingerprint(data.internal);
    meta.config_fingerprint = result.report.config_fingerprint;
    for (StudyModel m : config.models) {
      save_artifact(make_artifact(result.artifacts, m, meta), out / "models" / (std::string(to_string(m)) + ".json"));
    }
  } catch (const std::filesystem::filesystem_error& e) {
    fail(ErrorKind::IoError, e.what());
  }
  return result;
}

namespace {

bool blank_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  char c;
  while (in.get(c)) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

void cmd_score(const std::filesystem::path& artifact_path, const std::filesystem::path& patients_csv,
               const std::optional<std::filesystem::path>& features_csv, const std::filesystem::path& out_csv) {
  const ModelArtifact artifact = load_artifact(artifact_path);
  std::string out = "patient_id,risk_score,pesi_score,pesi_class\n";
  if (blank_file(patients_csv)) {
    write_text_file(out_csv, out);
    return;
  }

  Dataset ds;
  try {
    ds = ingest_clinical(patients_csv);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::MissingColumn) throw;
    fail(ErrorKind::SchemaMismatch, "patient file lacks column required by the model: " + std::string(e.what()));
  }
  if (ds.size() > 0 && uses_imaging(artifact.kind)) {
    if (!features_csv) fail(ErrorKind::InvalidInput, std::string(to_string(artifact.kind)) + " needs --features");
    attach_features(ds, ingest_features(*features_csv));
    for (const auto& r : ds.records) {
      if (!r.imaging_features) fail(ErrorKind::InvalidInput, "no imaging features for patient " + r.patient_id);
    }
  }

  if (ds.size() > 0) {
    const std::vector<double> risk = score_model(artifact.components, artifact.kind, ds);
    const Dataset prep = preprocess(ds, artifact.components.preprocessing);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const PesiResult p = pesi_score(prep.records[i].clinical);
      out += csv::escape_field(ds.records[i].patient_id) + "," + csv::format_double(risk[i]) + "," +
             std::to_string(p.score) + "," + std::string(to_string(p.risk_class)) + "\n";
    }
  }
  write_text_file(out_csv, out);
}

std::string cmd_report(const std::filesystem::path& report_json, const std::filesystem::path& out_dir) {
  std::ifstream in(report_json, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + report_json.string());
  json report;
  try {
    report = json::parse(in);
    write_km_files(report, out_dir);
    return render_text_summary(report);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaMismatch, report_json.string() + ": " + e.what());
  }
}

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 2;
  const auto* stage = dynamic_cast<const StageError*>(&e);
  switch (stage ? stage->cause_kind() : err->kind()) {
    case ErrorKind::MissingColumn:
    case ErrorKind::DuplicatePatientId:
    case ErrorKind::MalformedRow:
    case ErrorKind::AllMissingColumn:
    case ErrorKind::UnimputedRecord:
    case ErrorKind::EmptyWindowList:
    case ErrorKind::InconsistentDimension:
    case ErrorKind::DatasetTooSmall:
    case ErrorKind::NonPositiveAge:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidSpec:
    case ErrorKind::IoError:
    case ErrorKind::InvalidConfig:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::UnknownModelKind:
      return 1;
    default:
      return 2;
  }
}

namespace {

void setup_logging() {
  auto logger = spdlog::get("survfuse");
  if (!logger) logger = spdlog::stderr_color_mt("survfuse");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("SURVFUSE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int run_cli(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Survival models and risk fusion for pulmonary embolism mortality"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool truncate = false;
  std::string models;

  auto* generate = app.add_subcommand("generate", "write a synthetic cohort as CSV");
  generate->add_option("--config", config_path, "JSON config with a generator section")->check(CLI::ExistingFile);
  generate->add_option("--seed", seed, "generator seed (overrides config)");
  generate->add_option("--out", out_dir, "output directory")->required();

  auto* run = app.add_subcommand("run", "train, evaluate and write the report");
  run->add_option("--config", config_path, "JSON study config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "study seed (overrides config)");
  run->add_flag("--truncate-30d", truncate, "include the 30-day truncated evaluation");
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--models", models, "comma list of models");

  std::string artifact_path;
  std::string input;
  std::string features;
  std::string score_out = "scores.csv";
  auto* score = app.add_subcommand("score", "score patients with a saved model");
  score->add_option("--model", artifact_path, "models/<kind>.json artifact")->required()->check(CLI::ExistingFile);
  score->add_option("--input", input, "clinical CSV")->required()->check(CLI::ExistingFile);
  score->add_option("--features", features, "imaging feature CSV")->check(CLI::ExistingFile);
  score->add_option("--out", score_out, "scores CSV to write");

  std::string report_path;
  auto* report = app.add_subcommand("report", "re-render KM plots and print tables from report.json");
  report->add_option("--report", report_path, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out_dir, "directory for the KM files (default: next to report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      GeneratorConfig gen;
      if (!config_path.empty()) gen = load_config(config_path).generator.value_or(GeneratorConfig{});
      if (seed) gen.seed = *seed;
      const GenerateOutputs o = cmd_generate(gen, out_dir);
      std::cout << o.clinical.string() << "\n" << o.features.string() << "\n";
      if (o.external_clinical) std::cout << o.external_clinical->string() << "\n" << o.external_features->string() << "\n";
    } else if (run->parsed()) {
      StudyConfig cfg = load_config(config_path).study;
      if (seed) cfg.seed = *seed;
      if (truncate) cfg.short_term = true;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (!models.empty()) cfg.models = parse_model_list(models);
      cmd_run(cfg);
      std::cout << (cfg.output_dir / "report.json").string() << "\n";
    } else if (score->parsed()) {
      cmd_score(artifact_path, input, features.empty() ? std::nullopt : std::optional<std::filesystem::path>(features),
                score_out);
    } else if (report->parsed()) {
      const std::filesystem::path rp(report_path);
      std::cout << cmd_report(rp, out_dir.empty() ? rp.parent_path() : std::filesystem::path(out_dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace survfuse::cli
