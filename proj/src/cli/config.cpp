#include "survfuse/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "survfuse/cli/artifacts.hpp"
#include "survfuse/error.hpp"

namespace survfuse::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::InvalidConfig, field + ": " + what);
}

/// Rejects keys outside `allowed` so typos do not pass silently.
void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) bad(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) bad(join(path, key), "expected a finite number");
  return v.get<double>();
}

bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!is_non_negative_integer(v)) bad(join(path, key), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) bad(join(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) bad(join(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

std::filesystem::path get_path(const json& obj, const std::string& path, const char* key,
                               const std::filesystem::path& base_dir) {
  const std::string s = get_string(obj, path, key, "");
  if (s.empty()) return {};
  const std::filesystem::path p(s);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::vector<std::size_t> get_dims(const json& obj, const std::string& path, const char* key,
                                  const std::vector<std::size_t>& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) bad(join(path, key), "expected an array of layer widths");
  std::vector<std::size_t> out;
  for (const auto& d : v) {
    if (!is_non_negative_integer(d) || d.get<std::uint64_t>() == 0) bad(join(path, key), "layer widths must be positive");
    out.push_back(d.get<std::size_t>());
  }
  return out;
}

TrainConfig parse_train(const json& obj, const std::string& path, TrainConfig cfg) {
  check_keys(obj, path, {"hidden", "learning_rate", "epochs", "weight_decay", "patience", "optimizer"});
  cfg.hidden_dims = get_dims(obj, path, "hidden", cfg.hidden_dims);
  cfg.learning_rate = get_number(obj, path, "learning_rate", cfg.learning_rate);
  if (!(cfg.learning_rate > 0.0)) bad(join(path, "learning_rate"), "must be positive");
  cfg.epochs = static_cast<int>(get_uint(obj, path, "epochs", static_cast<std::uint64_t>(cfg.epochs)));
  cfg.weight_decay = get_number(obj, path, "weight_decay", cfg.weight_decay);
  if (cfg.weight_decay < 0.0) bad(join(path, "weight_decay"), "must be non-negative");
  cfg.early_stop_patience =
      static_cast<int>(get_uint(obj, path, "patience", static_cast<std::uint64_t>(cfg.early_stop_patience)));
  const std::string opt = get_string(obj, path, "optimizer", cfg.optimizer == Optimizer::Adam ? "adam" : "sgd");
  if (opt == "adam") {
    cfg.optimizer = Optimizer::Adam;
  } else if (opt == "sgd") {
    cfg.optimizer = Optimizer::Sgd;
  } else {
    bad(join(path, "optimizer"), "expected \"adam\" or \"sgd\"");
  }
  return cfg;
}

json train_to_json(const TrainConfig& cfg) {
  return {{"hidden", cfg.hidden_dims},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"weight_decay", cfg.weight_decay},
          {"patience", cfg.early_stop_patience},
          {"optimizer", cfg.optimizer == Optimizer::Adam ? "adam" : "sgd"}};
}

GeneratorConfig parse_generator(const json& obj) {
  const std::string path = "generator";
  check_keys(obj, path,
             {"n", "n_external", "seed", "baseline_rate", "censor_rate", "img_dim", "latent_weights",
              "missing_fraction", "max_acquisitions"});
  GeneratorConfig g;
  g.n = get_uint(obj, path, "n", g.n);
  if (g.n == 0) bad("generator.n", "must be positive");
  g.n_external = get_uint(obj, path, "n_external", g.n_external);
  g.seed = get_uint(obj, path, "seed", g.seed);
  g.baseline_rate = get_number(obj, path, "baseline_rate", g.baseline_rate);
  if (!(g.baseline_rate > 0.0)) bad("generator.baseline_rate", "must be positive");
  g.censor_rate = get_number(obj, path, "censor_rate", g.censor_rate);
  if (g.censor_rate < 0.0) bad("generator.censor_rate", "must be non-negative");
  g.img_dim = get_uint(obj, path, "img_dim", g.img_dim);
  if (g.img_dim == 0) bad("generator.img_dim", "must be positive");
  if (obj.contains("latent_weights")) {
    const json& w = obj.at("latent_weights");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
      bad("generator.latent_weights", "expected two numbers");
    }
    g.latent_weights = {w[0].get<double>(), w[1].get<double>()};
  }
  g.missing_fraction = get_number(obj, path, "missing_fraction", g.missing_fraction);
  if (g.missing_fraction < 0.0 || g.missing_fraction >= 1.0) bad("generator.missing_fraction", "must lie in [0, 1)");
  g.max_acquisitions =
      static_cast<int>(get_uint(obj, path, "max_acquisitions", static_cast<std::uint64_t>(g.max_acquisitions)));
  if (g.max_acquisitions < 1) bad("generator.max_acquisitions", "must be at least 1");
  return g;
}

}  // namespace

std::vector<StudyModel> parse_model_list(const std::string& list) {
  std::vector<StudyModel> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string name = list.substr(start, comma - start);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    if (!name.empty()) {
      const auto m = parse_study_model(name);
      if (!m) bad("models", "unknown model '" + name + "'");
      if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
    start = comma + 1;
  }
  if (out.empty()) bad("models", "no models listed");
  std::sort(out.begin(), out.end());
  return out;
}

CliConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "",
             {"data", "output_dir", "seed", "split", "models", "deep_clinical", "deep_imaging", "rsf",
              "nri_threshold", "bootstrap_resamples", "stratification", "short_term", "km_split", "generator"});
  CliConfig cfg;
  StudyConfig& s = cfg.study;

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"clinical", "features", "external_clinical", "external_features"});
    s.clinical_csv = get_path(d, "data", "clinical", base_dir);
    s.features_csv = get_path(d, "data", "features", base_dir);
    s.external_clinical_csv = get_path(d, "data", "external_clinical", base_dir);
    s.external_features_csv = get_path(d, "data", "external_features", base_dir);
  }
  if (j.contains("output_dir")) s.output_dir = get_path(j, "", "output_dir", base_dir);
  s.seed = get_uint(j, "", "seed", s.seed);

  if (j.contains("split")) {
    const json& sp = j.at("split");
    check_keys(sp, "split", {"train", "val", "test"});
    s.split.train = get_number(sp, "split", "train", s.split.train);
    s.split.val = get_number(sp, "split", "val", s.split.val);
    s.split.test = get_number(sp, "split", "test", s.split.test);
    for (auto [name, r] : {std::pair{"split.train", s.split.train}, std::pair{"split.val", s.split.val},
                           std::pair{"split.test", s.split.test}}) {
      if (r < 0.0 || r > 1.0) bad(name, "must lie in [0, 1]");
    }
    if (std::abs(s.split.train + s.split.val + s.split.test - 1.0) > 1e-9) bad("split", "ratios must sum to 1");
    if (s.split.train <= 0.0) bad("split.train", "must be positive");
  }

  if (j.contains("models")) {
    const json& m = j.at("models");
    if (!m.is_array()) bad("models", "expected an array of model names");
    std::string joined;
    for (const auto& name : m) {
      if (!name.is_string()) bad("models", "model names must be strings");
      joined += name.get<std::string>() + ",";
    }
    s.models = parse_model_list(joined);
  }

  if (j.contains("deep_clinical")) s.deep_clinical = parse_train(j.at("deep_clinical"), "deep_clinical", s.deep_clinical);
  if (j.contains("deep_imaging")) s.deep_imaging = parse_train(j.at("deep_imaging"), "deep_imaging", s.deep_imaging);
  if (j.contains("rsf")) {
    const json& r = j.at("rsf");
    check_keys(r, "rsf", {"n_trees", "mtry", "min_leaf"});
    s.rsf.n_trees = static_cast<int>(get_uint(r, "rsf", "n_trees", static_cast<std::uint64_t>(s.rsf.n_trees)));
    if (s.rsf.n_trees < 1) bad("rsf.n_trees", "must be at least 1");
    s.rsf.mtry = get_uint(r, "rsf", "mtry", s.rsf.mtry);
    s.rsf.min_leaf_size = get_uint(r, "rsf", "min_leaf", s.rsf.min_leaf_size);
    if (s.rsf.min_leaf_size < 1) bad("rsf.min_leaf", "must be at least 1");
  }

  s.nri_threshold = get_number(j, "", "nri_threshold", s.nri_threshold);
  if (s.nri_threshold <= 0.0 || s.nri_threshold >= 1.0) bad("nri_threshold", "must lie in (0, 1)");
  const std::uint64_t resamples =
      get_uint(j, "", "bootstrap_resamples", static_cast<std::uint64_t>(s.bootstrap_resamples));
  if (resamples < 100 || resamples > 1'000'000) bad("bootstrap_resamples", "must lie in [100, 1000000]");
  s.bootstrap_resamples = static_cast<int>(resamples);

  if (j.contains("stratification")) {
    const json& st = j.at("stratification");
    check_keys(st, "stratification", {"method", "threshold"});
    const std::string method = get_string(st, "stratification", "method", "median");
    if (method == "median") {
      s.stratification.method = StratifyMethod::Median;
    } else if (method == "threshold") {
      s.stratification.method = StratifyMethod::FixedThreshold;
    } else {
      bad("stratification.method", "expected \"median\" or \"threshold\"");
    }
    s.stratification.threshold = get_number(st, "stratification", "threshold", s.stratification.threshold);
  }
  s.short_term = get_bool(j, "", "short_term", s.short_term);
  s.km_split = get_string(j, "", "km_split", s.km_split);
  if (s.km_split != "train" && s.km_split != "val" && s.km_split != "test" && s.km_split != "external") {
    bad("km_split", "expected train, val, test or external");
  }

  if (j.contains("generator")) cfg.generator = parse_generator(j.at("generator"));
  return cfg;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json study_config_to_json(const StudyConfig& s) {
  json models = json::array();
  for (StudyModel m : s.models) models.push_back(std::string(to_string(m)));
  return {
      {"data",
       {{"clinical", s.clinical_csv.generic_string()},
        {"features", s.features_csv.generic_string()},
        {"external_clinical", s.external_clinical_csv.generic_string()},
        {"external_features", s.external_features_csv.generic_string()}}},
      {"seed", s.seed},
      {"split", {{"train", s.split.train}, {"val", s.split.val}, {"test", s.split.test}}},
      {"models", models},
      {"deep_clinical", train_to_json(s.deep_clinical)},
      {"deep_imaging", train_to_json(s.deep_imaging)},
      {"rsf", {{"n_trees", s.rsf.n_trees}, {"mtry", s.rsf.mtry}, {"min_leaf", s.rsf.min_leaf_size}}},
      {"nri_threshold", s.nri_threshold},
      {"bootstrap_resamples", s.bootstrap_resamples},
      {"stratification",
       {{"method", s.stratification.method == StratifyMethod::Median ? "median" : "threshold"},
        {"threshold", s.stratification.threshold}}},
      {"short_term", s.short_term},
      {"km_split", s.km_split},
  };
}

std::string config_fingerprint(const StudyConfig& config) { return fnv1a_hex(study_config_to_json(config).dump()); }

}  // namespace survfuse::cli
