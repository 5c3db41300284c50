#include "survfuse/cli/artifacts.hpp"

#include <cstdio>
#include <fstream>

#include "survfuse/error.hpp"

namespace survfuse::cli {

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string data_fingerprint(const Dataset& ds) {
  std::string bytes;
  for (const auto& r : ds.records) {
    bytes += r.patient_id;
    bytes += '\x1f';
    bytes += r.label.event ? '1' : '0';
    bytes += std::to_string(r.label.time_days);
    bytes += '\x1e';
  }
  return fnv1a_hex(bytes);
}

ModelArtifact make_artifact(const StudyArtifacts& all, StudyModel kind, const ArtifactMetadata& metadata) {
  ModelArtifact a;
  a.kind = kind;
  a.metadata = metadata;
  a.components.preprocessing = all.preprocessing;
  switch (kind) {
    case StudyModel::Pesi:
      break;
    case StudyModel::DeepClinical:
      a.components.clin_mlp = all.clin_mlp;
      break;
    case StudyModel::DeepImaging:
      a.components.img_mlp = all.img_mlp;
      break;
    case StudyModel::DeepMultimodal:
      a.components.clin_mlp = all.clin_mlp;
      a.components.img_mlp = all.img_mlp;
      a.components.multimodal = all.multimodal;
      break;
    case StudyModel::DeepPesiFused:
      a.components.clin_mlp = all.clin_mlp;
      a.components.img_mlp = all.img_mlp;
      a.components.pesi_fused = all.pesi_fused;
      break;
    case StudyModel::RsfFused:
      a.components.rsf_clin = all.rsf_clin;
      a.components.rsf_img = all.rsf_img;
      a.components.rsf_fused = all.rsf_fused;
      break;
  }
  // Imaging scaling is dead weight for clinical-only models.
  if (!uses_imaging(kind)) {
    a.components.preprocessing.imaging_mean.clear();
    a.components.preprocessing.imaging_sd.clear();
  }
  return a;
}

namespace {

[[noreturn]] void schema(const std::string& what) { fail(ErrorKind::SchemaMismatch, what); }

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) schema("weight matrix has the wrong number of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = j[i].get<std::vector<double>>();
    if (row.size() != cols) schema("weight matrix has the wrong number of columns");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mlp_to_json(const MlpSurvModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back({{"weight", matrix_to_json(l.weight)}, {"bias", to_std(l.bias)}});
  return {{"layer_dims", m.layer_dims}, {"seed", m.seed}, {"modality", to_string(m.modality)}, {"layers", layers}};
}

MlpSurvModel mlp_from_json(const json& j) {
  MlpSurvModel m;
  m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto modality = parse_modality(j.at("modality").get<std::string>());
  if (!modality) schema("unknown MLP modality");
  m.modality = *modality;
  const json& layers = j.at("layers");
  if (m.layer_dims.size() < 2 || layers.size() + 1 != m.layer_dims.size()) schema("MLP layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    DenseLayer l;
    l.weight = matrix_from_json(layers[k].at("weight"), m.layer_dims[k + 1], m.layer_dims[k]);
    const auto bias = layers[k].at("bias").get<std::vector<double>>();
    if (bias.size() != m.layer_dims[k + 1]) schema("MLP bias length mismatch");
    l.bias = to_eigen(bias);
    m.layers.push_back(std::move(l));
  }
  return m;
}

json forest_to_json(const ForestModel& f) {
  json trees = json::array();
  for (const auto& t : f.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf});
    json leaves = json::array();
    for (const auto& l : t.leaves) {
      leaves.push_back({{"grid_index", l.grid_index}, {"cumhaz", l.cumhaz}, {"mortality", l.mortality}});
    }
    trees.push_back({{"nodes", nodes}, {"leaves", leaves}});
  }
  return {{"params",
           {{"n_trees", f.params.n_trees},
            {"mtry", f.params.mtry},
            {"min_leaf", f.params.min_leaf_size},
            {"seed", f.params.seed}}},
          {"n_features", f.n_features},
          {"event_time_grid", f.event_time_grid},
          {"trees", trees}};
}

ForestModel forest_from_json(const json& j) {
  ForestModel f;
  const json& p = j.at("params");
  f.params.n_trees = p.at("n_trees").get<int>();
  f.params.mtry = p.at("mtry").get<std::size_t>();
  f.params.min_leaf_size = p.at("min_leaf").get<std::size_t>();
  f.params.seed = p.at("seed").get<std::uint64_t>();
  f.n_features = j.at("n_features").get<std::size_t>();
  f.event_time_grid = j.at("event_time_grid").get<std::vector<double>>();
  for (const auto& tj : j.at("trees")) {
    SurvivalTree t;
    for (const auto& nj : tj.at("nodes")) {
      if (!nj.is_array() || nj.size() != 5) schema("tree node must have five fields");
      t.nodes.push_back({nj[0].get<int>(), nj[1].get<double>(), nj[2].get<int>(), nj[3].get<int>(), nj[4].get<int>()});
    }
    for (const auto& lj : tj.at("leaves")) {
      LeafHazard l;
      l.grid_index = lj.at("grid_index").get<std::vector<std::size_t>>();
      l.cumhaz = lj.at("cumhaz").get<std::vector<double>>();
      l.mortality = lj.at("mortality").get<double>();
      if (l.grid_index.size() != l.cumhaz.size()) schema("leaf hazard arrays differ in length");
      t.leaves.push_back(std::move(l));
    }
    const auto n_nodes = static_cast<int>(t.nodes.size());
    const auto n_leaves = static_cast<int>(t.leaves.size());
    for (const auto& n : t.nodes) {
      const bool ok = n.feature < 0 ? (n.leaf >= 0 && n.leaf < n_leaves)
                                    : (static_cast<std::size_t>(n.feature) < f.n_features && n.left > 0 &&
                                       n.left < n_nodes && n.right > 0 && n.right < n_nodes);
      if (!ok) schema("tree node references out of range");
    }
    if (t.nodes.empty()) schema("empty tree");
    f.trees.push_back(std::move(t));
  }
  return f;
}

json fusion_to_json(const FusionModel& m) {
  json sources = json::array();
  for (Modality s : m.covariate_sources) sources.push_back(std::string(to_string(s)));
  json cumhaz = json::array();
  for (const auto& sp : m.inner.baseline_cumhaz) cumhaz.push_back({sp.time, sp.value});
  return {{"covariate_sources", sources},
          {"means", m.means},
          {"sds", m.sds},
          {"cox",
           {{"coefficients", to_std(m.inner.coefficients)},
            {"covariate_names", m.inner.covariate_names},
            {"log_likelihood", m.inner.log_likelihood},
            {"null_log_likelihood", m.inner.null_log_likelihood},
            {"converged", m.inner.converged},
            {"n_iterations", m.inner.n_iterations},
            {"baseline_cumhaz", cumhaz}}}};
}

FusionModel fusion_from_json(const json& j) {
  FusionModel m;
  for (const auto& s : j.at("covariate_sources")) {
    const auto modality = parse_modality(s.get<std::string>());
    if (!modality) schema("unknown fusion covariate '" + s.get<std::string>() + "'");
    m.covariate_sources.push_back(*modality);
  }
  m.means = j.at("means").get<std::vector<double>>();
  m.sds = j.at("sds").get<std::vector<double>>();
  const json& c = j.at("cox");
  m.inner.coefficients = to_eigen(c.at("coefficients").get<std::vector<double>>());
  m.inner.covariate_names = c.at("covariate_names").get<std::vector<std::string>>();
  m.inner.log_likelihood = c.at("log_likelihood").get<double>();
  m.inner.null_log_likelihood = c.at("null_log_likelihood").get<double>();
  m.inner.converged = c.at("converged").get<bool>();
  m.inner.n_iterations = c.at("n_iterations").get<int>();
  for (const auto& sp : c.at("baseline_cumhaz")) m.inner.baseline_cumhaz.push_back({sp[0].get<double>(), sp[1].get<double>()});
  const std::size_t k = m.covariate_sources.size();
  if (k == 0 || m.means.size() != k || m.sds.size() != k || static_cast<std::size_t>(m.inner.coefficients.size()) != k) {
    schema("fusion arrays differ in length");
  }
  return m;
}

json preprocessing_to_json(const Preprocessing& p) {
  const ImputationParams& im = p.imputation;
  return {{"binary_fill", im.binary_fill},
          {"age_fill", im.age_fill},
          {"age_norm", {{"mean", im.age_norm.mean}, {"sd", im.age_norm.sd}}},
          {"feature_dim", p.feature_dim},
          {"imaging_mean", p.imaging_mean},
          {"imaging_sd", p.imaging_sd}};
}

Preprocessing preprocessing_from_json(const json& j) {
  Preprocessing p;
  const auto fill = j.at("binary_fill").get<std::vector<bool>>();
  if (fill.size() != kBinaryVarCount) schema("binary_fill must have " + std::to_string(kBinaryVarCount) + " entries");
  for (std::size_t k = 0; k < kBinaryVarCount; ++k) p.imputation.binary_fill[k] = fill[k];
  p.imputation.age_fill = j.at("age_fill").get<double>();
  p.imputation.age_norm.mean = j.at("age_norm").at("mean").get<double>();
  p.imputation.age_norm.sd = j.at("age_norm").at("sd").get<double>();
  p.feature_dim = j.at("feature_dim").get<std::size_t>();
  p.imaging_mean = j.at("imaging_mean").get<std::vector<double>>();
  p.imaging_sd = j.at("imaging_sd").get<std::vector<double>>();
  if (p.imaging_mean.size() != p.imaging_sd.size()) schema("imaging scaling arrays differ in length");
  return p;
}

std::vector<std::string> covariate_names(StudyModel kind, std::size_t feature_dim) {
  std::vector<std::string> names(kClinicalVarNames.begin(), kClinicalVarNames.end());
  if (uses_imaging(kind)) {
    for (std::size_t k = 0; k < feature_dim; ++k) names.push_back("f" + std::to_string(k));
  }
  return names;
}

}  // namespace

json artifact_to_json(const ModelArtifact& a) {
  const StudyArtifacts& c = a.components;
  json components = json::object();
  if (c.clin_mlp) components["clin_mlp"] = mlp_to_json(*c.clin_mlp);
  if (c.img_mlp) components["img_mlp"] = mlp_to_json(*c.img_mlp);
  if (c.rsf_clin) components["rsf_clin"] = forest_to_json(*c.rsf_clin);
  if (c.rsf_img) components["rsf_img"] = forest_to_json(*c.rsf_img);
  if (c.multimodal) components["multimodal"] = fusion_to_json(*c.multimodal);
  if (c.pesi_fused) components["pesi_fused"] = fusion_to_json(*c.pesi_fused);
  if (c.rsf_fused) components["rsf_fused"] = fusion_to_json(*c.rsf_fused);
  return {{"schema_version", kArtifactSchemaVersion},
          {"model_kind", std::string(to_string(a.kind))},
          {"covariate_names", covariate_names(a.kind, c.preprocessing.feature_dim)},
          {"preprocessing", preprocessing_to_json(c.preprocessing)},
          {"components", components},
          {"metadata",
           {{"seed", a.metadata.seed},
            {"data_fingerprint", a.metadata.data_fingerprint},
            {"config_fingerprint", a.metadata.config_fingerprint}}}};
}

ModelArtifact artifact_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
    schema("artifact has no schema_version");
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kArtifactSchemaVersion) schema("unsupported artifact schema_version " + std::to_string(version));
  if (!j.contains("model_kind") || !j.at("model_kind").is_string()) {
    fail(ErrorKind::UnknownModelKind, "artifact has no model_kind");
  }
  const std::string kind_name = j.at("model_kind").get<std::string>();
  const auto kind = parse_study_model(kind_name);
  if (!kind) fail(ErrorKind::UnknownModelKind, "unknown model_kind '" + kind_name + "'");

  ModelArtifact a;
  a.kind = *kind;
  try {
    a.components.preprocessing = preprocessing_from_json(j.at("preprocessing"));
    const json& c = j.at("components");
    if (c.contains("clin_mlp")) a.components.clin_mlp = mlp_from_json(c.at("clin_mlp"));
    if (c.contains("img_mlp")) a.components.img_mlp = mlp_from_json(c.at("img_mlp"));
    if (c.contains("rsf_clin")) a.components.rsf_clin = forest_from_json(c.at("rsf_clin"));
    if (c.contains("rsf_img")) a.components.rsf_img = forest_from_json(c.at("rsf_img"));
    if (c.contains("multimodal")) a.components.multimodal = fusion_from_json(c.at("multimodal"));
    if (c.contains("pesi_fused")) a.components.pesi_fused = fusion_from_json(c.at("pesi_fused"));
    if (c.contains("rsf_fused")) a.components.rsf_fused = fusion_from_json(c.at("rsf_fused"));
    if (j.at("covariate_names") != json(covariate_names(a.kind, a.components.preprocessing.feature_dim))) {
      schema("covariate_names do not match the model kind");
    }
    const json& m = j.at("metadata");
    a.metadata.seed = m.at("seed").get<std::uint64_t>();
    a.metadata.data_fingerprint = m.at("data_fingerprint").get<std::string>();
    a.metadata.config_fingerprint = m.at("config_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    schema(std::string("malformed artifact: ") + e.what());
  }
  return a;
}

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << artifact_to_json(artifact).dump(1) << '\n';
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    schema(path.string() + " is not valid JSON: " + e.what());
  }
  return artifact_from_json(j);
}

}  // namespace survfuse::cli
