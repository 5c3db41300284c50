#include "survfuse/deep_survival.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "survfuse/cox.hpp"
#include "survfuse/error.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

MlpSurvModel init_model(std::size_t input_dim, const TrainConfig& config, Modality modality) {
  if (input_dim == 0) fail(ErrorKind::InvalidDimension, "input dimension must be at least 1");
  for (std::size_t h : config.hidden_dims) {
    if (h == 0) fail(ErrorKind::InvalidDimension, "hidden layers must have at least one unit");
  }
  MlpSurvModel model;
  model.seed = config.seed;
  model.modality = modality;
  model.layer_dims.push_back(input_dim);
  model.layer_dims.insert(model.layer_dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  model.layer_dims.push_back(1);

  Rng rng(config.seed);
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(model.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(model.layer_dims[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

void check_input(const MlpSurvModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    fail(ErrorKind::DimensionMismatch, "model expects " + std::to_string(model.input_dim()) +
                                           " features, got " + std::to_string(x.cols()));
  }
}

/// Pre-activations of every layer.
std::vector<Eigen::MatrixXd> forward_pass(const MlpSurvModel& model, const Eigen::MatrixXd& x) {
  check_input(model, x);
  std::vector<Eigen::MatrixXd> pre;
  pre.reserve(model.layers.size());
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    Eigen::MatrixXd z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < model.layers.size()) h = z.cwiseMax(0.0);
    pre.push_back(std::move(z));
  }
  return pre;
}

Eigen::VectorXd apply_sigmoid(const Eigen::VectorXd& logits) {
  return logits.unaryExpr([](double v) { return sigmoid(v); });
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double weight_penalty(const MlpSurvModel& model) {
  double total = 0.0;
  for (const auto& layer : model.layers) total += layer.weight.squaredNorm();
  return total;
}

bool has_event(std::span<const SurvivalLabel> labels) {
  return std::any_of(labels.begin(), labels.end(), [](const auto& l) { return l.event; });
}

}  // namespace

Eigen::VectorXd forward_logits(const MlpSurvModel& model, const Eigen::MatrixXd& x) {
  return forward_pass(model, x).back().col(0);
}

Eigen::VectorXd forward(const MlpSurvModel& model, const Eigen::MatrixXd& x) {
  return apply_sigmoid(forward_logits(model, x));
}

CoxLoss cox_loss(std::span<const double> scores, std::span<const SurvivalLabel> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::MismatchedLengths, "scores and labels differ in length");
  }
  const auto n_events =
      static_cast<double>(std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.event; }));
  if (n_events == 0.0) fail(ErrorKind::NoEvents, "Cox loss needs at least one event");
  EtaGradient g = partial_loglik_eta_gradient(scores, labels, TieMethod::Efron);
  CoxLoss out;
  out.loss = -g.loglik / n_events;
  out.grad_scores = std::move(g.gradient);
  for (double& v : out.grad_scores) v = -v / n_events;
  return out;
}

LossGradient loss_and_gradient(const MlpSurvModel& model, const Eigen::MatrixXd& x,
                               std::span<const SurvivalLabel> labels, double weight_decay) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(ErrorKind::DimensionMismatch, "X rows do not match labels");
  }
  const std::vector<Eigen::MatrixXd> pre = forward_pass(model, x);
  const Eigen::VectorXd scores = apply_sigmoid(pre.back().col(0));
  const CoxLoss cl = cox_loss(as_span(scores), labels);

  LossGradient out;
  out.loss = cl.loss + 0.5 * weight_decay * weight_penalty(model);
  out.grads.resize(model.layers.size());

  // delta holds dLoss/dz for the current layer, one row per sample.
  Eigen::MatrixXd delta(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s = scores(i);
    delta(i, 0) = cl.grad_scores[static_cast<std::size_t>(i)] * s * (1.0 - s);
  }
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd input = l == 0 ? x : Eigen::MatrixXd(pre[l - 1].cwiseMax(0.0));
    out.grads[l].weight = delta.transpose() * input + weight_decay * model.layers[l].weight;
    out.grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * model.layers[l].weight;
      delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

namespace {

class ParameterUpdater {
 public:
  ParameterUpdater(const MlpSurvModel& model, const TrainConfig& config) : config_(config) {
    for (const auto& layer : model.layers) {
      m_.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                    Eigen::VectorXd::Zero(layer.bias.size())});
      v_.push_back(m_.back());
    }
  }

  void step(MlpSurvModel& model, const std::vector<DenseLayer>& grads) {
    ++t_;
    const double lr = config_.learning_rate;
    if (config_.optimizer == Optimizer::Sgd) {
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        model.layers[l].weight -= lr * grads[l].weight;
        model.layers[l].bias -= lr * grads[l].bias;
      }
      return;
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      update(model.layers[l].weight, grads[l].weight, m_[l].weight, v_[l].weight);
      update(model.layers[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
    }
  }

 private:
  TrainConfig config_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  int t_ = 0;
};

bool all_finite(const MlpSurvModel& model) {
  return std::all_of(model.layers.begin(), model.layers.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

}  // namespace

TrainResult train(const MlpSurvModel& model, const Eigen::MatrixXd& x,
                  std::span<const SurvivalLabel> labels, const Eigen::MatrixXd& x_val,
                  std::span<const SurvivalLabel> labels_val, const TrainConfig& config) {
  if (config.epochs < 1) fail(ErrorKind::InvalidInput, "epochs must be at least 1");
  if (!(config.learning_rate >= 0.0)) fail(ErrorKind::InvalidInput, "learning rate must be non-negative");
  if (config.weight_decay < 0.0) fail(ErrorKind::InvalidInput, "weight decay must be non-negative");
  if (!has_event(labels)) fail(ErrorKind::NoEvents, "training labels contain no events");
  check_input(model, x);

  const bool use_val = x_val.rows() > 0 && has_event(labels_val);
  if (x_val.rows() > 0 && !use_val) {
    spdlog::warn("validation set has no events; early stopping disabled");
  }
  if (use_val) {
    check_input(model, x_val);
    if (static_cast<std::size_t>(x_val.rows()) != labels_val.size()) {
      fail(ErrorKind::DimensionMismatch, "validation rows do not match labels");
    }
  }
  auto val_loss = [&](const MlpSurvModel& m) {
    const Eigen::VectorXd s = forward(m, x_val);
    return cox_loss(as_span(s), labels_val).loss;
  };

  TrainResult result;
  result.model = model;
  MlpSurvModel best = model;
  double best_val = 0.0;
  int since_best = 0;
  if (use_val) {
    best_val = val_loss(model);
    result.val_loss_history.push_back(best_val);
  }

  ParameterUpdater updater(model, config);
  MlpSurvModel& current = result.model;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const LossGradient lg = loss_and_gradient(current, x, labels, config.weight_decay);
    if (!std::isfinite(lg.loss)) {
      fail(ErrorKind::DivergedLoss, "non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(lg.loss);
    updater.step(current, lg.grads);
    if (!all_finite(current)) {
      fail(ErrorKind::DivergedLoss, "non-finite weights after epoch " + std::to_string(epoch));
    }
    if (use_val) {
      const double v = val_loss(current);
      if (!std::isfinite(v)) fail(ErrorKind::DivergedLoss, "non-finite validation loss");
      result.val_loss_history.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = current;
        result.best_epoch = epoch + 1;
        since_best = 0;
      } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
        spdlog::debug("early stop at epoch {} (best {})", epoch + 1, result.best_epoch);
        break;
      }
    }
  }
  const LossGradient final_lg = loss_and_gradient(current, x, labels, config.weight_decay);
  result.loss_history.push_back(final_lg.loss);
  if (use_val) {
    result.model = std::move(best);
  } else {
    result.best_epoch = static_cast<int>(result.loss_history.size()) - 1;
  }
  return result;
}

std::vector<double> feature_importance(const MlpSurvModel& model) {
  if (model.layers.empty()) return {};
  const Eigen::MatrixXd& w = model.layers.front().weight;
  std::vector<double> out(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index k = 0; k < w.cols(); ++k) out[static_cast<std::size_t>(k)] = w.col(k).norm();
  return out;
}

double predictive_ability(std::span<const double> variable, std::span<const SurvivalLabel> labels) {
  const std::set<double> distinct(variable.begin(), variable.end());
  if (distinct.size() < 2) fail(ErrorKind::ConstantVariable, "variable takes a single value");
  const double c = c_index(variable, labels);
  return std::max(c, 1.0 - c);
}

double predictive_ability(const Dataset& ds, std::size_t variable_index) {
  if (variable_index >= kClinicalVarCount) {
    fail(ErrorKind::InvalidDimension, "clinical variable index out of range");
  }
  const NormParams params = ds.age_norm_params.value_or(NormParams{});
  std::vector<double> column;
  column.reserve(ds.size());
  for (const auto& rec : ds.records) column.push_back(clinical_feature_vector(rec, params)[variable_index]);
  return predictive_ability(column, ds.labels());
}

}  // namespace survfuse
