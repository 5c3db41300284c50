#include "survfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "survfuse/error.hpp"

namespace survfuse {

FitOptions default_fusion_options() {
  FitOptions options;
  options.ridge_penalty = kFusionRidge;
  return options;
}

namespace {

template <typename Map>
void check_keys(const FusionModel& model, const Map& scores) {
  for (Modality m : model.covariate_sources) {
    if (!scores.contains(m)) fail(ErrorKind::MissingModality, std::string(to_string(m)));
  }
  for (const auto& [m, _] : scores) {
    if (std::find(model.covariate_sources.begin(), model.covariate_sources.end(), m) ==
        model.covariate_sources.end()) {
      fail(ErrorKind::ExtraModality, std::string(to_string(m)));
    }
  }
}

}  // namespace

FusionModel fit_fusion(const ModalityScores& scores, std::span<const SurvivalLabel> labels,
                       const FitOptions& options) {
  if (scores.empty() || scores.size() > 3) {
    fail(ErrorKind::InvalidInput, "fusion takes one to three modality scores");
  }
  const std::size_t n = labels.size();
  FusionModel model;
  std::vector<std::string> names;
  // std::map iterates in enumerator order, which is the canonical covariate order.
  for (const auto& [m, v] : scores) {
    if (v.size() != n) {
      fail(ErrorKind::MismatchedLengths, std::string(to_string(m)) + " has " + std::to_string(v.size()) +
                                             " scores for " + std::to_string(n) + " labels");
    }
    double mean = 0.0;
    for (double s : v) mean += s;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double s : v) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    model.covariate_sources.push_back(m);
    model.means.push_back(mean);
    // A constant column standardizes to zeros; the ridge term keeps its
    // coefficient at zero.
    model.sds.push_back(sd > 0.0 ? sd : 1.0);
    names.emplace_back(to_string(m));
  }

  const auto k = static_cast<Eigen::Index>(model.covariate_sources.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& v = scores.at(model.covariate_sources[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < n; ++i) {
      x(static_cast<Eigen::Index>(i), j) =
          (v[i] - model.means[static_cast<std::size_t>(j)]) / model.sds[static_cast<std::size_t>(j)];
    }
  }
  model.inner = fit_cox(x, labels, options, std::move(names));
  return model;
}

double predict_fused(const FusionModel& model, const std::map<Modality, double>& scores) {
  check_keys(model, scores);
  double eta = 0.0;
  for (std::size_t j = 0; j < model.covariate_sources.size(); ++j) {
    const double z = (scores.at(model.covariate_sources[j]) - model.means[j]) / model.sds[j];
    eta += model.inner.coefficients(static_cast<Eigen::Index>(j)) * z;
  }
  return eta;
}

std::vector<double> predict_fused(const FusionModel& model, const ModalityScores& scores) {
  check_keys(model, scores);
  const std::size_t n = scores.at(model.covariate_sources.front()).size();
  for (const auto& [m, v] : scores) {
    if (v.size() != n) fail(ErrorKind::MismatchedLengths, "modality score vectors differ in length");
  }
  std::vector<double> out(n, 0.0);
  std::map<Modality, double> row;
  for (std::size_t i = 0; i < n; ++i) {
    for (Modality m : model.covariate_sources) row[m] = scores.at(m)[i];
    out[i] = predict_fused(model, row);
  }
  return out;
}

}  // namespace survfuse
