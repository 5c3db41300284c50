#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "survfuse/dataset.hpp"

namespace survfuse {

enum class TieMethod { Efron, Breslow };

struct FitOptions {
  TieMethod tie_method = TieMethod::Efron;
  int max_iterations = 100;
  /// Convergence when the max-norm of the penalized gradient drops below this.
  double tolerance = 1e-8;
  double ridge_penalty = 0.0;
  int max_step_halvings = 20;
};

/// One jump of a step function: value holds from `time` until the next point.
struct StepPoint {
  double time = 0.0;
  double value = 0.0;
};

struct CoxModel {
  Eigen::VectorXd coefficients;
  std::vector<std::string> covariate_names;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  bool converged = false;
  int n_iterations = 0;
  /// Breslow cumulative baseline hazard at the distinct event times.
  std::vector<StepPoint> baseline_cumhaz;
};

/// Cox log partial likelihood as a function of the linear predictor eta.
/// Risk set R(t) = {j : t_j >= t}. Log-sum-exp terms are computed after
/// subtracting max(eta).
double partial_loglik_eta(std::span<const double> eta, std::span<const SurvivalLabel> labels,
                          TieMethod ties);

struct EtaGradient {
  double loglik = 0.0;
  std::vector<double> gradient;  ///< d loglik / d eta_k
};
EtaGradient partial_loglik_eta_gradient(std::span<const double> eta,
                                        std::span<const SurvivalLabel> labels, TieMethod ties);

double partial_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                      std::span<const SurvivalLabel> labels, TieMethod ties = TieMethod::Efron);

struct CoxDerivatives {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};
CoxDerivatives partial_loglik_derivatives(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                                          std::span<const SurvivalLabel> labels, TieMethod ties);

/// Newton-Raphson with step halving on the ridge-penalized partial likelihood.
/// A fit that runs out of iterations returns its best iterate with
/// converged = false.
CoxModel fit_cox(const Eigen::MatrixXd& x, std::span<const SurvivalLabel> labels,
                 const FitOptions& options = {}, std::vector<std::string> covariate_names = {});

/// Breslow estimate H0(t) = sum_{s <= t} d_s / sum_{j in R(s)} exp(eta_j).
std::vector<StepPoint> breslow_cumhaz(std::span<const double> eta,
                                      std::span<const SurvivalLabel> labels);

/// Value of a step function at t: the last point with time <= t, else 0.
double step_value(std::span<const StepPoint> steps, double t);

double predict_linear(const CoxModel& model, std::span<const double> x);
Eigen::VectorXd predict_linear(const CoxModel& model, const Eigen::MatrixXd& x);

/// S(t | x) = exp(-H0(t) exp(beta' x)).
double survival_at(const CoxModel& model, std::span<const double> x, double t);

}  // namespace survfuse
