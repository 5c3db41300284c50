#include "survfuse/cox.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "survfuse/error.hpp"

namespace survfuse {

namespace {

/// Subjects sorted by ascending time, cut into runs of equal time.
struct TimeGroups {
  std::vector<std::size_t> order;
  std::vector<std::size_t> starts;  ///< starts.back() == order.size()

  std::size_t count() const { return starts.size() - 1; }
};

TimeGroups group_by_time(std::span<const SurvivalLabel> labels) {
  TimeGroups g;
  g.order.resize(labels.size());
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    return labels[a].time_days < labels[b].time_days;
  });
  for (std::size_t i = 0; i < g.order.size(); ++i) {
    if (i == 0 || labels[g.order[i]].time_days != labels[g.order[i - 1]].time_days) {
      g.starts.push_back(i);
    }
  }
  g.starts.push_back(g.order.size());
  return g;
}

void check_eta(std::span<const double> eta, std::span<const SurvivalLabel> labels) {
  if (eta.size() != labels.size()) {
    fail(ErrorKind::DimensionMismatch, "eta has " + std::to_string(eta.size()) + " entries, labels " +
                                           std::to_string(labels.size()));
  }
  for (double e : eta) {
    if (!std::isfinite(e)) fail(ErrorKind::NonFiniteInput, "non-finite linear predictor");
  }
  for (const auto& l : labels) {
    if (!std::isfinite(l.time_days)) fail(ErrorKind::NonFiniteInput, "non-finite survival time");
  }
}

double max_or_zero(std::span<const double> v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double tie_fraction(TieMethod ties, std::size_t l, std::size_t d) {
  return ties == TieMethod::Efron ? static_cast<double>(l) / static_cast<double>(d) : 0.0;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

double partial_loglik_eta(std::span<const double> eta, std::span<const SurvivalLabel> labels,
                          TieMethod ties) {
  check_eta(eta, labels);
  const TimeGroups groups = group_by_time(labels);
  const double shift = max_or_zero(eta);

  double loglik = 0.0;
  double risk_sum = 0.0;
  for (std::size_t g = groups.count(); g-- > 0;) {
    double tie_sum = 0.0;
    std::size_t d = 0;
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t i = groups.order[k];
      const double w = std::exp(eta[i] - shift);
      risk_sum += w;
      if (labels[i].event) {
        tie_sum += w;
        loglik += eta[i];
        ++d;
      }
    }
    for (std::size_t l = 0; l < d; ++l) {
      loglik -= std::log(risk_sum - tie_fraction(ties, l, d) * tie_sum) + shift;
    }
  }
  return loglik;
}

EtaGradient partial_loglik_eta_gradient(std::span<const double> eta,
                                        std::span<const SurvivalLabel> labels, TieMethod ties) {
  check_eta(eta, labels);
  const TimeGroups groups = group_by_time(labels);
  const std::size_t n_groups = groups.count();
  const double shift = max_or_zero(eta);

  std::vector<double> w(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) w[i] = std::exp(eta[i] - shift);

  // Per group: inv_sum = sum_l 1/D_l and frac_sum = sum_l c_l/D_l over the
  // Efron (or Breslow) denominators of that event time.
  std::vector<double> inv_sum(n_groups, 0.0);
  std::vector<double> frac_sum(n_groups, 0.0);
  EtaGradient out;
  out.gradient.assign(eta.size(), 0.0);

  double risk_sum = 0.0;
  for (std::size_t g = n_groups; g-- > 0;) {
    double tie_sum = 0.0;
    std::size_t d = 0;
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t i = groups.order[k];
      risk_sum += w[i];
      if (labels[i].event) {
        tie_sum += w[i];
        out.loglik += eta[i];
        ++d;
      }
    }
    for (std::size_t l = 0; l < d; ++l) {
      const double c = tie_fraction(ties, l, d);
      const double denom = risk_sum - c * tie_sum;
      out.loglik -= std::log(denom) + shift;
      inv_sum[g] += 1.0 / denom;
      frac_sum[g] += c / denom;
    }
  }

  // Subject k sits in the risk set of every group at or before its own time.
  double cumulative = 0.0;
  for (std::size_t g = 0; g < n_groups; ++g) {
    cumulative += inv_sum[g];
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t i = groups.order[k];
      const double own = labels[i].event ? frac_sum[g] : 0.0;
      out.gradient[i] = (labels[i].event ? 1.0 : 0.0) - w[i] * (cumulative - own);
    }
  }
  return out;
}

namespace {

void check_design(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                  std::span<const SurvivalLabel> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(ErrorKind::DimensionMismatch, "X has " + std::to_string(x.rows()) + " rows, labels " +
                                           std::to_string(labels.size()));
  }
  if (beta.size() != x.cols()) {
    fail(ErrorKind::DimensionMismatch, "beta has " + std::to_string(beta.size()) +
                                           " entries, X has " + std::to_string(x.cols()) + " columns");
  }
  if (!x.allFinite() || !beta.allFinite()) fail(ErrorKind::NonFiniteInput, "non-finite covariate or coefficient");
}

}  // namespace

double partial_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                      std::span<const SurvivalLabel> labels, TieMethod ties) {
  check_design(beta, x, labels);
  const Eigen::VectorXd eta = x * beta;
  return partial_loglik_eta(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())),
                            labels, ties);
}

CoxDerivatives partial_loglik_derivatives(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                                          std::span<const SurvivalLabel> labels, TieMethod ties) {
  check_design(beta, x, labels);
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  const std::vector<double> eta_v = to_std(eta);
  check_eta(eta_v, labels);
  const TimeGroups groups = group_by_time(labels);
  const double shift = max_or_zero(eta_v);

  CoxDerivatives out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  for (std::size_t g = groups.count(); g-- > 0;) {
    double t0 = 0.0;
    Eigen::VectorXd t1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(p, p);
    std::size_t d = 0;
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const auto i = static_cast<Eigen::Index>(groups.order[k]);
      const double w = std::exp(eta(i) - shift);
      const auto xi = x.row(i).transpose();
      s0 += w;
      s1.noalias() += w * xi;
      s2.noalias() += w * xi * xi.transpose();
      if (labels[groups.order[k]].event) {
        t0 += w;
        t1.noalias() += w * xi;
        t2.noalias() += w * xi * xi.transpose();
        out.loglik += eta(i);
        out.gradient += xi;
        ++d;
      }
    }
    for (std::size_t l = 0; l < d; ++l) {
      const double c = tie_fraction(ties, l, d);
      const double d0 = s0 - c * t0;
      const Eigen::VectorXd d1 = s1 - c * t1;
      const Eigen::MatrixXd d2 = s2 - c * t2;
      out.loglik -= std::log(d0) + shift;
      out.gradient -= d1 / d0;
      out.hessian -= d2 / d0 - (d1 * d1.transpose()) / (d0 * d0);
    }
  }
  return out;
}

std::vector<StepPoint> breslow_cumhaz(std::span<const double> eta,
                                      std::span<const SurvivalLabel> labels) {
  check_eta(eta, labels);
  const TimeGroups groups = group_by_time(labels);
  const double shift = max_or_zero(eta);

  std::vector<StepPoint> jumps;
  double risk_sum = 0.0;
  for (std::size_t g = groups.count(); g-- > 0;) {
    std::size_t d = 0;
    for (std::size_t k = groups.starts[g]; k < groups.starts[g + 1]; ++k) {
      const std::size_t i = groups.order[k];
      risk_sum += std::exp(eta[i] - shift);
      if (labels[i].event) ++d;
    }
    if (d > 0) {
      const double t = labels[groups.order[groups.starts[g]]].time_days;
      jumps.push_back({t, static_cast<double>(d) / risk_sum * std::exp(-shift)});
    }
  }
  std::reverse(jumps.begin(), jumps.end());
  double total = 0.0;
  for (auto& j : jumps) {
    total += j.value;
    j.value = total;
  }
  return jumps;
}

double step_value(std::span<const StepPoint> steps, double t) {
  const auto it = std::upper_bound(steps.begin(), steps.end(), t,
                                   [](double value, const StepPoint& p) { return value < p.time; });
  if (it == steps.begin()) return 0.0;
  return std::prev(it)->value;
}

CoxModel fit_cox(const Eigen::MatrixXd& x, std::span<const SurvivalLabel> labels,
                 const FitOptions& options, std::vector<std::string> covariate_names) {
  if (options.tolerance <= 0.0 || options.max_iterations < 1) {
    fail(ErrorKind::InvalidInput, "tolerance must be positive and max_iterations >= 1");
  }
  if (options.ridge_penalty < 0.0) fail(ErrorKind::InvalidInput, "ridge penalty must be non-negative");
  const Eigen::Index p = x.cols();
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (x.rows() != n) fail(ErrorKind::DimensionMismatch, "X rows do not match labels");
  if (n < p + 1) fail(ErrorKind::InvalidInput, "need n >= p + 1 subjects");
  if (!x.allFinite()) fail(ErrorKind::NonFiniteInput, "non-finite covariate");
  if (std::none_of(labels.begin(), labels.end(), [](const auto& l) { return l.event; })) {
    fail(ErrorKind::NoEvents, "Cox fit needs at least one observed event");
  }
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != p) {
    fail(ErrorKind::DimensionMismatch, "covariate name count does not match X columns");
  }

  const double ridge = options.ridge_penalty;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);

  auto evaluate = [&](const Eigen::VectorXd& beta) {
    CoxDerivatives d = partial_loglik_derivatives(beta, x, labels, options.tie_method);
    const double objective = d.loglik - 0.5 * ridge * beta.squaredNorm();
    d.gradient -= ridge * beta;
    d.hessian -= ridge * identity;
    return std::pair{objective, d};
  };

  CoxModel model;
  model.covariate_names = std::move(covariate_names);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto [objective, derivs] = evaluate(beta);
  model.null_log_likelihood = derivs.loglik;

  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iterations; ++iter) {
    if (p == 0 || derivs.gradient.cwiseAbs().maxCoeff() < options.tolerance) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd information = -derivs.hessian;
    const Eigen::LLT<Eigen::MatrixXd> chol(information);
    const Eigen::VectorXd pivots = Eigen::MatrixXd(chol.matrixL()).diagonal();
    if (chol.info() != Eigen::Success || !pivots.allFinite() ||
        pivots.minCoeff() * pivots.minCoeff() < 1e-14 * pivots.maxCoeff() * pivots.maxCoeff()) {
      fail(ErrorKind::SingularInformation,
           "information matrix is singular; a constant or collinear covariate needs ridge_penalty > 0");
    }
    Eigen::VectorXd step = chol.solve(derivs.gradient);

    bool improved = false;
    for (int h = 0; h <= options.max_step_halvings; ++h) {
      const Eigen::VectorXd candidate = beta + step;
      auto [cand_objective, cand_derivs] = evaluate(candidate);
      if (std::isfinite(cand_objective) && cand_objective >= objective - 1e-12 * std::abs(objective)) {
        beta = candidate;
        objective = cand_objective;
        derivs = std::move(cand_derivs);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      ++iter;
      break;
    }
  }
  if (!converged && p > 0 && derivs.gradient.cwiseAbs().maxCoeff() < options.tolerance) converged = true;
  if (!converged) {
    spdlog::warn("Cox fit did not converge after {} iterations (max |gradient| {:.3g}); returning best iterate",
                 iter, derivs.gradient.cwiseAbs().maxCoeff());
  }

  model.coefficients = beta;
  model.log_likelihood = derivs.loglik;
  model.converged = converged;
  model.n_iterations = iter;
  const Eigen::VectorXd eta = x * beta;
  model.baseline_cumhaz = breslow_cumhaz(to_std(eta), labels);
  return model;
}

double predict_linear(const CoxModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.coefficients.size()) {
    fail(ErrorKind::DimensionMismatch, "expected " + std::to_string(model.coefficients.size()) +
                                           " covariates, got " + std::to_string(x.size()));
  }
  double eta = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) eta += model.coefficients(static_cast<Eigen::Index>(k)) * x[k];
  return eta;
}

Eigen::VectorXd predict_linear(const CoxModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.coefficients.size()) {
    fail(ErrorKind::DimensionMismatch, "expected " + std::to_string(model.coefficients.size()) +
                                           " covariates, got " + std::to_string(x.cols()));
  }
  return x * model.coefficients;
}

double survival_at(const CoxModel& model, std::span<const double> x, double t) {
  const double eta = predict_linear(model, x);
  return std::exp(-step_value(model.baseline_cumhaz, t) * std::exp(eta));
}

}  // namespace survfuse
