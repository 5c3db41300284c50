#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "survfuse/error.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/synthetic.hpp"

using namespace survfuse;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Stage;
}

std::vector<double> random_scores(std::mt19937_64& gen, std::size_t n, int levels) {
  std::uniform_int_distribution<int> d(0, levels);
  std::vector<double> s(n);
  for (double& x : s) x = d(gen) / 3.0;
  return s;
}

}  // namespace

TEST_CASE("c-index simple cases") {
  const std::vector<SurvivalLabel> labels{{true, 1}, {true, 2}, {true, 3}, {true, 4}};
  CHECK(c_index(std::vector{4.0, 3.0, 2.0, 1.0}, labels) == 1.0);
  CHECK(c_index(std::vector{1.0, 2.0, 3.0, 4.0}, labels) == 0.0);
  CHECK(c_index(std::vector(4, 0.3), labels) == 0.5);
  CHECK(kind_of([] { c_index(std::vector{1.0, 2.0}, std::vector<SurvivalLabel>{{false, 1}, {false, 2}}); }) ==
        ErrorKind::NoComparablePairs);
  CHECK(kind_of([] { c_index(std::vector{1.0}, std::vector<SurvivalLabel>{{true, 1}, {false, 2}}); }) ==
        ErrorKind::MismatchedLengths);
}

TEST_CASE("c-index equals pair enumeration") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto labels = oracle::random_labels(gen, 20, 8);
    labels[0] = {true, 1};
    labels[1] = {false, 9};
    const auto s = random_scores(gen, 20, trial % 2 ? 5 : 1000);
    CHECK(c_index(s, labels) == oracle::c_index(s, labels));
  }
}

TEST_CASE("c-index ranking properties") {
  std::mt19937_64 gen(32);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    auto labels = oracle::random_labels(gen, 30, 1000);
    labels[0] = {true, 0.5};
    std::vector<double> s(30);
    for (double& x : s) x = normal(gen);
    std::vector<double> neg(30);
    std::vector<double> cubed(30);
    std::vector<double> squashed(30);
    for (std::size_t i = 0; i < s.size(); ++i) {
      neg[i] = -s[i];
      cubed[i] = s[i] * s[i] * s[i] + 3.0;
      squashed[i] = sigmoid(s[i]);
    }
    const double c = c_index(s, labels);
    CHECK(c + c_index(neg, labels) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c_index(cubed, labels) == c);
    CHECK(c_index(squashed, labels) == c);
  }
}

TEST_CASE("bootstrap intervals") {
  const std::vector<SurvivalLabel> labels{{true, 1}, {false, 2}, {true, 3}, {true, 4}, {false, 5}, {true, 6}};
  const std::vector<double> s{6, 5, 4, 3, 2, 1};
  BootstrapOptions opts;
  opts.n_resamples = 200;
  opts.seed = 5;
  const MetricFn constant = [](std::span<const double>, std::span<const SurvivalLabel>) { return 0.42; };
  const Interval flat = bootstrap_ci(constant, s, labels, opts);
  CHECK(flat.lo == 0.42);
  CHECK(flat.hi == 0.42);

  std::mt19937_64 gen(33);
  auto big = oracle::random_labels(gen, 80, 50);
  big[0].event = true;
  const auto scores = random_scores(gen, 80, 100);
  const Interval a = bootstrap_ci(c_index, scores, big, opts);
  const Interval b = bootstrap_ci(c_index, scores, big, opts);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.lo <= a.hi);

  opts.n_resamples = 50;
  CHECK(kind_of([&] { bootstrap_ci(c_index, scores, big, opts); }) == ErrorKind::TooFewResamples);
}

TEST_CASE("bootstrap interval coverage") {
  GeneratorSpec spec;
  spec.n = 100000;
  spec.seed = 900;
  const CoxSample population = gen_cox_linear(spec);
  const double target = c_index(population.true_risk, population.labels);

  int covered = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    spec.n = 200;
    spec.seed = 1000 + rep;
    const CoxSample s = gen_cox_linear(spec);
    BootstrapOptions opts;
    opts.n_resamples = 200;
    opts.seed = 2000 + rep;
    const Interval ci = bootstrap_ci(c_index, s.true_risk, s.labels, opts);
    covered += ci.lo <= target && target <= ci.hi;
  }
  CHECK(covered >= 90);
}

TEST_CASE("bootstrap samples do not depend on evaluation order") {
  std::mt19937_64 gen(34);
  auto labels = oracle::random_labels(gen, 40, 20);
  labels[0].event = true;
  const auto s1 = random_scores(gen, 40, 50);
  const auto s2 = random_scores(gen, 40, 50);
  BootstrapOptions opts;
  opts.n_resamples = 150;
  opts.seed = 77;
  const auto a = bootstrap_samples(c_index, s1, labels, opts);
  const auto paired = paired_bootstrap_samples(c_index, s1, s2, labels, opts);
  CHECK(paired.a == a);
  CHECK(paired.b == bootstrap_samples(c_index, s2, labels, opts));
}

TEST_CASE("percentile interpolation") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(percentile_sorted(v, 0.0) == 1.0);
  CHECK(percentile_sorted(v, 1.0) == 5.0);
  CHECK(percentile_sorted(v, 0.5) == 3.0);
  CHECK(percentile_sorted(v, 0.125) == doctest::Approx(1.5));
}

TEST_CASE("Kaplan-Meier product limit") {
  const KmCurve c = km_curve(std::vector<SurvivalLabel>{{true, 1}, {false, 2}, {true, 3}});
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0].survival == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c.points[1].survival == 0.0);
  CHECK(c.points[1].at_risk == 1);
  CHECK(c.survival_at(0.5) == 1.0);
  CHECK(c.survival_at(1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(c.survival_at(2.5) == doctest::Approx(2.0 / 3.0));
  CHECK(c.survival_at(3.0) == 0.0);

  const KmCurve censored = km_curve(std::vector<SurvivalLabel>{{false, 1}, {false, 4}});
  CHECK(censored.survival_at(10.0) == 1.0);
  CHECK(km_curve(std::vector<SurvivalLabel>{{true, 5}}).survival_at(5.0) == 0.0);
  CHECK(kind_of([] { km_curve({}); }) == ErrorKind::EmptyGroup);

  std::mt19937_64 gen(35);
  for (int trial = 0; trial < 40; ++trial) {
    auto labels = oracle::random_labels(gen, 15, 6);
    labels[0].event = true;
    const KmCurve k = km_curve(labels);
    // The last subject by time (events before censorings at equal times).
    auto last = *std::max_element(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
      return a.time_days < b.time_days || (a.time_days == b.time_days && a.event && !b.event);
    });
    CHECK((k.points.back().survival == 0.0) == last.event);
    for (std::size_t i = 1; i < k.points.size(); ++i) CHECK(k.points[i].survival <= k.points[i - 1].survival);
  }
}

TEST_CASE("log-rank") {
  const std::vector<SurvivalLabel> g{{true, 1}, {false, 2}, {true, 3}, {true, 5}};
  const TestResult same = logrank_test(g, g);
  CHECK(same.statistic == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(same.p_value == doctest::Approx(1.0));

  // Six early deaths against six late deaths, all distinct times.
  std::vector<SurvivalLabel> early;
  std::vector<SurvivalLabel> late;
  for (int i = 1; i <= 6; ++i) {
    early.push_back({true, static_cast<double>(i)});
    late.push_back({true, static_cast<double>(i + 6)});
  }
  // Hand arithmetic: at the k-th early death 13-k remain, 7-k of them early.
  double o_minus_e = 0.0;
  double v = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double n = 13 - k;
    const double n1 = 7 - k;
    o_minus_e += 1.0 - n1 / n;
    v += n1 * (n - n1) / (n * n);
  }
  const TestResult r = logrank_test(early, late);
  CHECK(r.statistic == doctest::Approx(o_minus_e * o_minus_e / v).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(r.statistic / 2.0))).epsilon(1e-12));
  CHECK(r.p_value < 0.001);
  CHECK(chi_square_1df_upper(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("net reclassification") {
  std::vector<SurvivalLabel> labels;
  for (int i = 0; i < 10; ++i) labels.push_back({true, 1.0 + i});
  for (int i = 0; i < 10; ++i) labels.push_back({false, 20.0 + i});
  std::vector<double> old_s(20, 0.2);
  CHECK(nri(old_s, old_s, labels).nri == 0.0);
  std::vector<double> new_s = old_s;
  new_s[3] = 0.9;
  const NriResult one = nri(old_s, new_s, labels);
  CHECK(one.nri == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(one.event_up == 1);

  std::vector<double> hi(20, 0.9);
  std::vector<double> flipped(20);
  for (int i = 0; i < 20; ++i) flipped[static_cast<std::size_t>(i)] = i < 10 ? 0.1 : 0.9;
  std::vector<double> start(20);
  for (int i = 0; i < 20; ++i) start[static_cast<std::size_t>(i)] = i < 10 ? 0.9 : 0.1;
  CHECK(nri(start, flipped, labels).nri == -2.0);

  // Threshold lives on the probability scale: 0.7 is exactly high.
  std::vector<double> at_cut = old_s;
  at_cut[0] = 0.7;
  CHECK(nri(old_s, at_cut, labels).event_up == 1);

  std::mt19937_64 gen(36);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 100; ++trial) {
    auto l = oracle::random_labels(gen, 30, 10, 0.5);
    l[0].event = true;
    l[1].event = false;
    std::vector<double> a(30);
    std::vector<double> b(30);
    for (int i = 0; i < 30; ++i) {
      a[static_cast<std::size_t>(i)] = u(gen);
      b[static_cast<std::size_t>(i)] = u(gen);
    }
    CHECK(nri(a, b, l).nri == -nri(b, a, l).nri);
  }
  CHECK(kind_of([&] { nri(old_s, old_s, std::vector<SurvivalLabel>(20, {false, 1})); }) == ErrorKind::NoEvents);
  CHECK(kind_of([&] { nri(old_s, old_s, std::vector<SurvivalLabel>(20, {true, 1})); }) == ErrorKind::NoNonevents);
}

TEST_CASE("Wilcoxon signed-rank") {
  const TestResult all_pos = wilcoxon_signed_rank(std::vector{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  CHECK(all_pos.statistic == 21.0);
  CHECK(all_pos.p_value == 0.03125);
  CHECK(all_pos.method == "wilcoxon_exact");

  const TestResult sym = wilcoxon_signed_rank(std::vector{1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0});
  CHECK(sym.p_value > 0.9);

  CHECK(kind_of([] { wilcoxon_signed_rank(std::vector(10, 0.0)); }) == ErrorKind::TooFewPairs);
  CHECK(kind_of([] { wilcoxon_signed_rank(std::vector{1.0, 2.0, 0.0, 0.0, 3.0, 4.0}); }) == ErrorKind::TooFewPairs);

  std::mt19937_64 gen(37);
  std::normal_distribution<double> normal(0.2, 1.0);
  std::uniform_int_distribution<int> coarse(-4, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 16);
    std::vector<double> d(n);
    for (double& x : d) x = trial % 3 == 0 ? coarse(gen) : normal(gen);
    std::size_t nonzero = 0;
    for (double x : d) nonzero += x != 0.0;
    if (nonzero < 5) continue;
    CHECK(wilcoxon_signed_rank(d).p_value == oracle::wilcoxon_exact_p(d));
  }

  std::vector<double> large(200);
  for (double& x : large) x = normal(gen);
  const TestResult approx = wilcoxon_signed_rank(large);
  CHECK(approx.method == "wilcoxon_normal");
  CHECK(approx.p_value < 0.05);
}

TEST_CASE("mid ranks") {
  CHECK(mid_ranks(std::vector{3.0, 1.0, 3.0, 2.0}) == std::vector{3.5, 1.0, 3.5, 2.0});
}
