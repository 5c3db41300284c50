#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "survfuse/error.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/rng.hpp"
#include "survfuse/rsf.hpp"
#include "survfuse/synthetic.hpp"

using namespace survfuse;

namespace {

struct Split {
  Eigen::MatrixXd x_train;
  std::vector<SurvivalLabel> y_train;
  Eigen::MatrixXd x_test;
  std::vector<SurvivalLabel> y_test;
};

/// Log-hazard 2 * x0; x1 and x2 are noise.
Split strong_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  std::vector<SurvivalLabel> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = rng.normal();
    x(r, 1) = rng.normal();
    x(r, 2) = rng.normal();
    const double t = rng.exponential(0.05 * std::exp(2.0 * x(r, 0)));
    const double c = rng.exponential(0.01);
    y[i] = {t <= c, std::min(t, c)};
  }
  const auto n_train = static_cast<Eigen::Index>(n * 7 / 10);
  Split s;
  s.x_train = x.topRows(n_train);
  s.x_test = x.bottomRows(x.rows() - n_train);
  s.y_train.assign(y.begin(), y.begin() + n_train);
  s.y_test.assign(y.begin() + n_train, y.end());
  return s;
}

/// Walks a tree with its split rules, independently of SurvivalTree::route.
const LeafHazard& walk(const SurvivalTree& t, std::span<const double> x) {
  int node = 0;
  while (t.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return t.leaves[static_cast<std::size_t>(t.nodes[static_cast<std::size_t>(node)].leaf)];
}

}  // namespace

TEST_CASE("log-rank split score") {
  const std::vector<SurvivalLabel> g{{true, 1}, {false, 2}, {true, 4}};
  CHECK(logrank_split_score(g, g) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

  const std::vector<SurvivalLabel> early{{true, 1}, {true, 2}, {true, 3}};
  const std::vector<SurvivalLabel> late{{false, 10}, {false, 11}, {false, 12}};
  // Hand arithmetic: risk sets 6, 5, 4 with 3, 2, 1 early members.
  const double o_minus_e = (1 - 3.0 / 6) + (1 - 2.0 / 5) + (1 - 1.0 / 4);
  const double v = 3.0 * 3 / 36 + 2.0 * 3 / 25 + 1.0 * 3 / 16;
  CHECK(logrank_split_score(early, late) == doctest::Approx(o_minus_e / std::sqrt(v)).epsilon(1e-12));
  CHECK(logrank_split_score(early, late) > 2.0);
  CHECK_THROWS_AS(logrank_split_score({}, late), Error);
}

TEST_CASE("minimum leaf size blocks every split") {
  const Split s = strong_signal(60, 1);
  RsfParams p;
  p.n_trees = 10;
  p.min_leaf_size = 100;
  const ForestModel f = fit_forest(s.x_train, s.y_train, p);
  for (const auto& t : f.trees) CHECK(t.nodes.size() == 1);
  const auto risk = predict_risk(f, s.x_test);
  for (double r : risk) CHECK(r == risk.front());
}

TEST_CASE("strong signal and permuted labels") {
  const Split s = strong_signal(500, 2);
  RsfParams p;
  p.n_trees = 50;
  p.seed = 4;
  const ForestModel f = fit_forest(s.x_train, s.y_train, p);
  CHECK(c_index(predict_risk(f, s.x_test), s.y_test) >= 0.75);

  std::vector<SurvivalLabel> permuted = s.y_train;
  Rng rng(5);
  rng.shuffle(std::span<SurvivalLabel>(permuted));
  const ForestModel noise = fit_forest(s.x_train, permuted, p);
  const double c = c_index(predict_risk(noise, s.x_test), s.y_test);
  CHECK(c >= 0.40);
  CHECK(c <= 0.60);
}

TEST_CASE("forest structure") {
  const Split s = strong_signal(200, 3);
  RsfParams p;
  p.n_trees = 15;
  p.min_leaf_size = 10;
  p.seed = 8;
  const ForestModel f = fit_forest(s.x_train, s.y_train, p);
  for (std::size_t i = 1; i < f.event_time_grid.size(); ++i) CHECK(f.event_time_grid[i - 1] < f.event_time_grid[i]);
  for (const auto& t : f.trees) {
    for (const auto& leaf : t.leaves) {
      for (std::size_t k = 1; k < leaf.cumhaz.size(); ++k) CHECK(leaf.cumhaz[k] >= leaf.cumhaz[k - 1]);
      double sum = 0.0;
      for (std::size_t g = 0; g < f.event_time_grid.size(); ++g) sum += leaf.at(g);
      CHECK(leaf.mortality == doctest::Approx(sum).epsilon(1e-12));
    }
  }
  for (Eigen::Index i = 0; i < s.x_test.rows(); ++i) {
    const Eigen::VectorXd row = s.x_test.row(i);
    const std::span<const double> x(row.data(), static_cast<std::size_t>(row.size()));
    double total = 0.0;
    for (const auto& t : f.trees) total += walk(t, x).mortality;
    const double risk = predict_risk(f, x);
    CHECK(risk >= 0.0);
    CHECK(risk == doctest::Approx(total / static_cast<double>(f.trees.size())).epsilon(1e-12));
  }
}

TEST_CASE("fit does not depend on record order") {
  const Split s = strong_signal(150, 6);
  RsfParams p;
  p.n_trees = 10;
  p.seed = 9;
  const ForestModel a = fit_forest(s.x_train, s.y_train, p);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s.x_train.rows()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(10);
  rng.shuffle(std::span<Eigen::Index>(order));
  Eigen::MatrixXd x(s.x_train.rows(), s.x_train.cols());
  std::vector<SurvivalLabel> y(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = s.x_train.row(order[i]);
    y[i] = s.y_train[static_cast<std::size_t>(order[i])];
  }
  const ForestModel b = fit_forest(x, y, p);
  CHECK(predict_risk(a, s.x_test) == predict_risk(b, s.x_test));
}
