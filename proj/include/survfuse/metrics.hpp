#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "survfuse/dataset.hpp"

namespace survfuse {

/// Harrell's concordance index. A pair (i, j) is comparable when
/// t_i < t_j and subject i had the event; it scores 1 when score_i > score_j
/// and 0.5 on tied scores. O(n log n).
double c_index(std::span<const double> scores, std::span<const SurvivalLabel> labels);

using MetricFn = std::function<double(std::span<const double>, std::span<const SurvivalLabel>)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapOptions {
  int n_resamples = 1000;
  std::uint64_t seed = 0;
  /// Redraws allowed for a resample whose metric is undefined.
  int max_retries = 20;
};

/// Draws n_resamples index sets of size n with replacement. Resample r uses
/// the seed derive_seed(seed, r), plus attempt offsets on retries, so results
/// do not depend on evaluation order.
class BootstrapSampler {
 public:
  BootstrapSampler(std::size_t n, const BootstrapOptions& options);
  std::vector<std::size_t> draw(int resample, int attempt) const;
  const BootstrapOptions& options() const { return options_; }

 private:
  std::size_t n_;
  BootstrapOptions options_;
};

/// Percentile of sorted data with linear interpolation between order statistics.
double percentile_sorted(std::span<const double> sorted, double q);

/// Metric value on every resample, in resample order.
std::vector<double> bootstrap_samples(const MetricFn& metric, std::span<const double> scores,
                                      std::span<const SurvivalLabel> labels,
                                      const BootstrapOptions& options);

/// 2.5% / 97.5% percentile interval over patient-level bootstrap resamples.
Interval bootstrap_ci(const MetricFn& metric, std::span<const double> scores,
                      std::span<const SurvivalLabel> labels, const BootstrapOptions& options);

/// Applies two metrics to the same resamples (for paired comparisons).
struct PairedSamples {
  std::vector<double> a;
  std::vector<double> b;
};
PairedSamples paired_bootstrap_samples(const MetricFn& metric, std::span<const double> scores_a,
                                       std::span<const double> scores_b,
                                       std::span<const SurvivalLabel> labels,
                                       const BootstrapOptions& options);

struct KmPoint {
  double time = 0.0;
  double survival = 1.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
};

struct KmCurve {
  /// One point per distinct event time.
  std::vector<KmPoint> points;
  std::string group_label;

  /// S(t); 1 before the first event.
  double survival_at(double t) const;
};

KmCurve km_curve(std::span<const SurvivalLabel> labels, std::string group_label = {});

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
};

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_1df_upper(double x);

struct LogrankComponents {
  double observed_minus_expected = 0.0;  ///< for the first group
  double variance = 0.0;
};
LogrankComponents logrank_components(std::span<const SurvivalLabel> a, std::span<const SurvivalLabel> b);

/// Two-sample log-rank chi-square with 1 df.
TestResult logrank_test(std::span<const SurvivalLabel> a, std::span<const SurvivalLabel> b);

struct NriResult {
  double nri = 0.0;
  std::size_t event_up = 0;
  std::size_t event_down = 0;
  std::size_t nonevent_up = 0;
  std::size_t nonevent_down = 0;
  std::size_t n_events = 0;
  std::size_t n_nonevents = 0;
  double threshold = 0.7;
};

inline constexpr double kDefaultNriThreshold = 0.7;

/// Categorical NRI with a single cut: score >= threshold is "high risk".
/// Scores are expected on the probability scale.
NriResult nri(std::span<const double> old_scores, std::span<const double> new_scores,
              std::span<const SurvivalLabel> labels, double threshold = kDefaultNriThreshold);

double sigmoid(double x);
std::vector<double> sigmoid(std::span<const double> x);

/// Mid-ranks (1-based) of the values; ties share the average rank.
std::vector<double> mid_ranks(std::span<const double> values);

/// Wilcoxon signed-rank test. Zero differences are dropped; at least five
/// nonzero differences are required. Exact two-sided p-value by enumerating
/// the sign-pattern distribution for n <= 20, normal approximation with
/// continuity and tie correction above.
TestResult wilcoxon_signed_rank(std::span<const double> diffs);

inline constexpr std::size_t kWilcoxonExactMaxN = 20;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

}  // namespace survfuse
