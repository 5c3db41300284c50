#include "survfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survfuse/error.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::MismatchedLengths,
         std::string(what) + ": " + std::to_string(a) + " scores vs " + std::to_string(b) + " labels");
  }
}

/// Fenwick tree over score ranks.
class RankCounter {
 public:
  explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Number of inserted ranks strictly below `rank`.
  std::uint64_t below(std::size_t rank) const {
    std::uint64_t total = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace

double c_index(std::span<const double> scores, std::span<const SurvivalLabel> labels) {
  check_lengths(scores.size(), labels.size(), "c_index");
  const std::size_t n = scores.size();

  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), scores[i]) -
                                       distinct.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a].time_days > labels[b].time_days; });

  // Walk from the longest time down; the counter holds every subject whose
  // time is strictly greater than the current group's time.
  RankCounter counter(distinct.size());
  std::uint64_t inserted = 0;
  std::uint64_t comparable = 0;
  std::uint64_t concordant = 0;
  std::uint64_t tied = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && labels[order[end]].time_days == labels[order[start]].time_days) ++end;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t i = order[k];
      if (!labels[i].event) continue;
      const std::uint64_t lower = counter.below(rank[i]);
      const std::uint64_t lower_or_equal = counter.below(rank[i] + 1);
      comparable += inserted;
      concordant += lower;
      tied += lower_or_equal - lower;
    }
    for (std::size_t k = start; k < end; ++k) {
      counter.add(rank[order[k]]);
      ++inserted;
    }
    start = end;
  }
  if (comparable == 0) fail(ErrorKind::NoComparablePairs, "no comparable pairs for the concordance index");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / static_cast<double>(comparable);
}

BootstrapSampler::BootstrapSampler(std::size_t n, const BootstrapOptions& options)
    : n_(n), options_(options) {
  if (options.n_resamples < 100) {
    fail(ErrorKind::TooFewResamples, "bootstrap needs at least 100 resamples, got " +
                                         std::to_string(options.n_resamples));
  }
  if (n == 0) fail(ErrorKind::EmptyInput, "cannot bootstrap an empty sample");
}

std::vector<std::size_t> BootstrapSampler::draw(int resample, int attempt) const {
  Rng rng(derive_seed(derive_seed(options_.seed, static_cast<std::uint64_t>(resample)),
                      static_cast<std::uint64_t>(attempt)));
  std::vector<std::size_t> idx(n_);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n_));
  return idx;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::EmptyInput, "percentile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

bool undefined_metric(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::NoComparablePairs:
    case ErrorKind::NoEvents:
    case ErrorKind::NoNonevents:
      return true;
    default:
      return false;
  }
}

template <typename Evaluate>
void for_each_resample(std::size_t n, const BootstrapOptions& options, Evaluate&& evaluate) {
  const BootstrapSampler sampler(n, options);
  for (int r = 0; r < options.n_resamples; ++r) {
    bool done = false;
    for (int attempt = 0; attempt <= options.max_retries && !done; ++attempt) {
      const auto idx = sampler.draw(r, attempt);
      try {
        evaluate(idx);
        done = true;
      } catch (const Error& e) {
        if (!undefined_metric(e)) throw;
      }
    }
    if (!done) {
      fail(ErrorKind::DegenerateResampling,
           "resample " + std::to_string(r) + " stayed undefined after " +
               std::to_string(options.max_retries) + " redraws");
    }
  }
}

}  // namespace

std::vector<double> bootstrap_samples(const MetricFn& metric, std::span<const double> scores,
                                      std::span<const SurvivalLabel> labels,
                                      const BootstrapOptions& options) {
  check_lengths(scores.size(), labels.size(), "bootstrap");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(options.n_resamples, 0)));
  std::vector<double> s(scores.size());
  std::vector<SurvivalLabel> l(labels.size());
  for_each_resample(scores.size(), options, [&](const std::vector<std::size_t>& idx) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s[k] = scores[idx[k]];
      l[k] = labels[idx[k]];
    }
    out.push_back(metric(s, l));
  });
  return out;
}

Interval bootstrap_ci(const MetricFn& metric, std::span<const double> scores,
                      std::span<const SurvivalLabel> labels, const BootstrapOptions& options) {
  std::vector<double> samples = bootstrap_samples(metric, scores, labels, options);
  std::sort(samples.begin(), samples.end());
  return {percentile_sorted(samples, 0.025), percentile_sorted(samples, 0.975)};
}

PairedSamples paired_bootstrap_samples(const MetricFn& metric, std::span<const double> scores_a,
                                       std::span<const double> scores_b,
                                       std::span<const SurvivalLabel> labels,
                                       const BootstrapOptions& options) {
  check_lengths(scores_a.size(), labels.size(), "paired bootstrap");
  check_lengths(scores_b.size(), labels.size(), "paired bootstrap");
  PairedSamples out;
  std::vector<double> a(labels.size());
  std::vector<double> b(labels.size());
  std::vector<SurvivalLabel> l(labels.size());
  for_each_resample(labels.size(), options, [&](const std::vector<std::size_t>& idx) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      a[k] = scores_a[idx[k]];
      b[k] = scores_b[idx[k]];
      l[k] = labels[idx[k]];
    }
    // Both metrics must be defined before either result is kept.
    const double va = metric(a, l);
    const double vb = metric(b, l);
    out.a.push_back(va);
    out.b.push_back(vb);
  });
  return out;
}

double KmCurve::survival_at(double t) const {
  double s = 1.0;
  for (const auto& p : points) {
    if (p.time > t) break;
    s = p.survival;
  }
  return s;
}

KmCurve km_curve(std::span<const SurvivalLabel> labels, std::string group_label) {
  if (labels.empty()) fail(ErrorKind::EmptyGroup, "Kaplan-Meier needs at least one subject");
  std::vector<SurvivalLabel> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.time_days < b.time_days; });

  KmCurve curve;
  curve.group_label = std::move(group_label);
  std::size_t at_risk = sorted.size();
  double s = 1.0;
  for (std::size_t start = 0; start < sorted.size();) {
    std::size_t end = start;
    std::size_t events = 0;
    while (end < sorted.size() && sorted[end].time_days == sorted[start].time_days) {
      if (sorted[end].event) ++events;
      ++end;
    }
    if (events > 0) {
      s *= static_cast<double>(at_risk - events) / static_cast<double>(at_risk);
      curve.points.push_back({sorted[start].time_days, s, at_risk, events});
    }
    at_risk -= end - start;
    start = end;
  }
  return curve;
}

double chi_square_1df_upper(double x) {
  if (!(x > 0.0)) return 1.0;
  return std::erfc(std::sqrt(0.5 * x));
}

LogrankComponents logrank_components(std::span<const SurvivalLabel> a, std::span<const SurvivalLabel> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::EmptyGroup, "log-rank test needs two non-empty groups");
  struct Entry {
    double time;
    bool event;
    bool first;
  };
  std::vector<Entry> all;
  all.reserve(a.size() + b.size());
  for (const auto& l : a) all.push_back({l.time_days, l.event, true});
  for (const auto& l : b) all.push_back({l.time_days, l.event, false});
  std::sort(all.begin(), all.end(), [](const Entry& x, const Entry& y) { return x.time < y.time; });
  if (std::none_of(all.begin(), all.end(), [](const Entry& e) { return e.event; })) {
    fail(ErrorKind::NoEvents, "log-rank test needs at least one event");
  }

  LogrankComponents out;
  double n_first = static_cast<double>(a.size());
  double n_total = static_cast<double>(all.size());
  for (std::size_t start = 0; start < all.size();) {
    std::size_t end = start;
    double d = 0.0;
    double d_first = 0.0;
    double leaving_first = 0.0;
    while (end < all.size() && all[end].time == all[start].time) {
      if (all[end].event) {
        d += 1.0;
        if (all[end].first) d_first += 1.0;
      }
      if (all[end].first) leaving_first += 1.0;
      ++end;
    }
    if (d > 0.0) {
      const double frac = n_first / n_total;
      out.observed_minus_expected += d_first - d * frac;
      if (n_total > 1.0) out.variance += d * frac * (1.0 - frac) * (n_total - d) / (n_total - 1.0);
    }
    n_first -= leaving_first;
    n_total -= static_cast<double>(end - start);
    start = end;
  }
  return out;
}

TestResult logrank_test(std::span<const SurvivalLabel> a, std::span<const SurvivalLabel> b) {
  const LogrankComponents c = logrank_components(a, b);
  TestResult result;
  result.method = "logrank";
  result.statistic = c.variance > 0.0 ? c.observed_minus_expected * c.observed_minus_expected / c.variance : 0.0;
  result.p_value = chi_square_1df_upper(result.statistic);
  return result;
}

NriResult nri(std::span<const double> old_scores, std::span<const double> new_scores,
              std::span<const SurvivalLabel> labels, double threshold) {
  check_lengths(old_scores.size(), labels.size(), "nri");
  check_lengths(new_scores.size(), labels.size(), "nri");
  NriResult r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool was_high = old_scores[i] >= threshold;
    const bool is_high = new_scores[i] >= threshold;
    const bool up = !was_high && is_high;
    const bool down = was_high && !is_high;
    if (labels[i].event) {
      ++r.n_events;
      r.event_up += up;
      r.event_down += down;
    } else {
      ++r.n_nonevents;
      r.nonevent_up += up;
      r.nonevent_down += down;
    }
  }
  if (r.n_events == 0) fail(ErrorKind::NoEvents, "NRI needs at least one event");
  if (r.n_nonevents == 0) fail(ErrorKind::NoNonevents, "NRI needs at least one non-event");
  const auto diff = [](std::size_t a, std::size_t b) {
    return static_cast<double>(a) - static_cast<double>(b);
  };
  r.nri = diff(r.event_up, r.event_down) / static_cast<double>(r.n_events) +
          diff(r.nonevent_down, r.nonevent_up) / static_cast<double>(r.n_nonevents);
  return r;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> sigmoid(std::span<const double> x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return sigmoid(v); });
  return out;
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs) {
  std::vector<double> nonzero;
  for (double d : diffs) {
    if (!std::isfinite(d)) fail(ErrorKind::NonFiniteInput, "non-finite paired difference");
    if (d != 0.0) nonzero.push_back(d);
  }
  const std::size_t n = nonzero.size();
  if (n < kWilcoxonMinPairs) {
    fail(ErrorKind::TooFewPairs, "Wilcoxon signed-rank needs at least " +
                                     std::to_string(kWilcoxonMinPairs) + " nonzero differences, have " +
                                     std::to_string(n));
  }
  std::vector<double> magnitudes(n);
  std::transform(nonzero.begin(), nonzero.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
  const std::vector<double> ranks = mid_ranks(magnitudes);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nonzero[i] > 0.0) w_plus += ranks[i];
  }

  TestResult result;
  result.statistic = w_plus;

  if (n <= kWilcoxonExactMaxN) {
    // Mid-ranks are multiples of 1/2, so doubled ranks are integers and the
    // sign-pattern distribution of 2W is a subset-sum count.
    std::vector<std::size_t> doubled(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t r : doubled) {
      for (std::size_t s = total; s >= r; --s) count[s] += count[s - r];
    }
    const auto observed = static_cast<std::size_t>(std::lround(2.0 * w_plus));
    double le = 0.0;
    double ge = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= observed) le += count[s];
      if (s >= observed) ge += count[s];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    result.p_value = std::min(1.0, 2.0 * std::min(le, ge) / patterns);
    result.method = "wilcoxon_exact";
    return result;
  }

  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t start = 0; start < n;) {
      std::size_t end = start;
      while (end < n && sorted[end] == sorted[start]) ++end;
      const double t = static_cast<double>(end - start);
      tie_term += t * t * t - t;
      start = end;
    }
  }
  const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  if (variance <= 0.0) {
    result.p_value = 1.0;
  } else {
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(variance);
    result.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  result.method = "wilcoxon_normal";
  return result;
}

}  // namespace survfuse
