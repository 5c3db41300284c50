#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "survfuse/dataset.hpp"
#include "survfuse/modality.hpp"

namespace survfuse {

struct DenseLayer {
  Eigen::MatrixXd weight;  ///< out x in
  Eigen::VectorXd bias;    ///< out
};

/// MLP risk head: ReLU hidden layers, then one linear unit with a sigmoid.
struct MlpSurvModel {
  std::vector<std::size_t> layer_dims;  ///< input, hidden..., 1
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;
  Modality modality = Modality::Clin;

  std::size_t input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }
};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 500;
  double weight_decay = 1e-4;
  std::vector<std::size_t> hidden_dims{32};
  std::uint64_t seed = 0;
  /// Epochs without validation improvement before stopping; 0 disables.
  int early_stop_patience = 50;
  Optimizer optimizer = Optimizer::Adam;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from the config seed; biases zero.
MlpSurvModel init_model(std::size_t input_dim, const TrainConfig& config,
                        Modality modality = Modality::Clin);

/// Pre-sigmoid output of the final unit.
Eigen::VectorXd forward_logits(const MlpSurvModel& model, const Eigen::MatrixXd& x);
/// Risk scores in (0, 1).
Eigen::VectorXd forward(const MlpSurvModel& model, const Eigen::MatrixXd& x);

struct CoxLoss {
  double loss = 0.0;
  std::vector<double> grad_scores;
};

/// Negative Efron partial log-likelihood of the scores, divided by the
/// number of events, with its exact gradient.
CoxLoss cox_loss(std::span<const double> scores, std::span<const SurvivalLabel> labels);

struct LossGradient {
  double loss = 0.0;
  std::vector<DenseLayer> grads;  ///< same shapes as model.layers
};

/// cox_loss(forward(x)) + weight_decay/2 * sum ||W||^2 and its gradient
/// with respect to every weight and bias.
LossGradient loss_and_gradient(const MlpSurvModel& model, const Eigen::MatrixXd& x,
                               std::span<const SurvivalLabel> labels, double weight_decay);

struct TrainResult {
  MlpSurvModel model;
  /// Training objective before each update, then once more after the last.
  std::vector<double> loss_history;
  /// Validation loss of the initial model and after each update; empty when
  /// no validation set was supplied.
  std::vector<double> val_loss_history;
  int best_epoch = 0;
};

/// Full-batch training. With a validation set (containing at least one event)
/// the lowest-validation-loss snapshot is returned and training stops after
/// `early_stop_patience` epochs without improvement.
TrainResult train(const MlpSurvModel& model, const Eigen::MatrixXd& x,
                  std::span<const SurvivalLabel> labels, const Eigen::MatrixXd& x_val,
                  std::span<const SurvivalLabel> labels_val, const TrainConfig& config);

/// L2 norm of each input's column in the first-layer weight matrix.
std::vector<double> feature_importance(const MlpSurvModel& model);

/// max(c, 1 - c) of the variable used alone as a risk ranking.
double predictive_ability(std::span<const double> variable, std::span<const SurvivalLabel> labels);
/// Same, for column `variable_index` of the clinical feature vector.
double predictive_ability(const Dataset& ds, std::size_t variable_index);

}  // namespace survfuse
