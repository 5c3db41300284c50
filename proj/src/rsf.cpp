#include "survfuse/rsf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survfuse/error.hpp"
#include "survfuse/metrics.hpp"
#include "survfuse/rng.hpp"

namespace survfuse {

double LeafHazard::at(std::size_t grid_pos) const {
  const auto it = std::upper_bound(grid_index.begin(), grid_index.end(), grid_pos);
  if (it == grid_index.begin()) return 0.0;
  return cumhaz[static_cast<std::size_t>(it - grid_index.begin()) - 1];
}

const LeafHazard& SurvivalTree::route(std::span<const double> x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return leaves[static_cast<std::size_t>(nodes[static_cast<std::size_t>(node)].leaf)];
}

double logrank_split_score(std::span<const SurvivalLabel> left, std::span<const SurvivalLabel> right) {
  if (left.empty() || right.empty()) fail(ErrorKind::EmptyChild, "both children need at least one subject");
  const LogrankComponents c = logrank_components(left, right);
  if (c.variance <= 0.0) return 0.0;
  return std::abs(c.observed_minus_expected) / std::sqrt(c.variance);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const SurvivalLabel> labels,
              const std::vector<double>& grid, std::size_t mtry, std::size_t min_leaf, std::uint64_t seed)
      : x_(x), labels_(labels), grid_(grid), mtry_(mtry), min_leaf_(min_leaf), rng_(seed) {}

  SurvivalTree build(std::vector<std::size_t> sample) {
    struct Pending {
      int node;
      std::vector<std::size_t> idx;
    };
    tree_.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, std::move(sample)});
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      const Split split = best_split(p.idx);
      if (!split.found) {
        tree_.nodes[static_cast<std::size_t>(p.node)].leaf = static_cast<int>(tree_.leaves.size());
        tree_.leaves.push_back(leaf_hazard(p.idx));
        continue;
      }
      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      for (std::size_t i : p.idx) {
        (x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(split.feature)) <= split.threshold ? left : right)
            .push_back(i);
      }
      const int left_node = static_cast<int>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      const int right_node = static_cast<int>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      TreeNode& n = tree_.nodes[static_cast<std::size_t>(p.node)];
      n.feature = static_cast<int>(split.feature);
      n.threshold = split.threshold;
      n.left = left_node;
      n.right = right_node;
      stack.push_back({right_node, std::move(right)});
      stack.push_back({left_node, std::move(left)});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
  };

  Split best_split(const std::vector<std::size_t>& idx) {
    Split best;
    const std::size_t m = idx.size();
    if (m < 2 * min_leaf_) return best;

    std::vector<double> event_times;
    for (std::size_t i : idx) {
      if (labels_[i].event) event_times.push_back(labels_[i].time_days);
    }
    if (event_times.empty()) return best;
    std::sort(event_times.begin(), event_times.end());
    event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());
    const std::size_t k_times = event_times.size();

    // reach[s]: number of node event times <= t_s, so s is at risk at the
    // first reach[s] of them. event_pos[s]: position of s's own event time.
    std::vector<std::size_t> reach(m);
    std::vector<long> event_pos(m, -1);
    std::vector<double> at_risk(k_times, 0.0);
    std::vector<double> deaths(k_times, 0.0);
    {
      std::vector<double> reach_count(k_times + 1, 0.0);
      for (std::size_t s = 0; s < m; ++s) {
        const SurvivalLabel& l = labels_[idx[s]];
        reach[s] = static_cast<std::size_t>(
            std::upper_bound(event_times.begin(), event_times.end(), l.time_days) - event_times.begin());
        reach_count[reach[s]] += 1.0;
        if (l.event) {
          event_pos[s] = static_cast<long>(reach[s]) - 1;
          deaths[reach[s] - 1] += 1.0;
        }
      }
      double running = 0.0;
      for (std::size_t k = k_times; k-- > 0;) {
        running += reach_count[k + 1];
        at_risk[k] = running;
      }
    }

    const auto n_features = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), std::size_t{0});
    const std::size_t tries = std::min(mtry_, n_features);
    for (std::size_t j = 0; j < tries; ++j) {
      const auto pick = j + static_cast<std::size_t>(rng_.below(n_features - j));
      std::swap(features[j], features[pick]);
    }

    std::vector<std::size_t> order(m);
    std::vector<double> left_reach(k_times + 1);
    std::vector<double> left_deaths(k_times);
    for (std::size_t j = 0; j < tries; ++j) {
      const auto f = static_cast<Eigen::Index>(features[j]);
      auto value = [&](std::size_t s) { return x_(static_cast<Eigen::Index>(idx[s]), f); };
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
      if (value(order.front()) == value(order.back())) continue;

      std::fill(left_reach.begin(), left_reach.end(), 0.0);
      std::fill(left_deaths.begin(), left_deaths.end(), 0.0);
      for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t s = order[i];
        left_reach[reach[s]] += 1.0;
        if (event_pos[s] >= 0) left_deaths[static_cast<std::size_t>(event_pos[s])] += 1.0;
        const double here = value(s);
        const double next = value(order[i + 1]);
        if (here == next) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf_ || m - n_left < min_leaf_) continue;

        double diff = 0.0;
        double var = 0.0;
        double left_at_risk = 0.0;
        for (std::size_t k = k_times; k-- > 0;) {
          left_at_risk += left_reach[k + 1];
          const double n = at_risk[k];
          const double d = deaths[k];
          const double frac = left_at_risk / n;
          diff += left_deaths[k] - d * frac;
          if (n > 1.0) var += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
        }
        if (var <= 0.0) continue;
        const double score = std::abs(diff) / std::sqrt(var);
        if (score > best.score) {
          double threshold = 0.5 * (here + next);
          if (!(threshold < next)) threshold = here;
          best = {true, features[j], threshold, score};
        }
      }
    }
    return best;
  }

  LeafHazard leaf_hazard(std::vector<std::size_t> idx) const {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return labels_[a].time_days < labels_[b].time_days; });
    LeafHazard leaf;
    double at_risk = static_cast<double>(idx.size());
    double h = 0.0;
    for (std::size_t start = 0; start < idx.size();) {
      std::size_t end = start;
      double d = 0.0;
      while (end < idx.size() && labels_[idx[end]].time_days == labels_[idx[start]].time_days) {
        if (labels_[idx[end]].event) d += 1.0;
        ++end;
      }
      if (d > 0.0) {
        h += d / at_risk;
        const double t = labels_[idx[start]].time_days;
        leaf.grid_index.push_back(
            static_cast<std::size_t>(std::lower_bound(grid_.begin(), grid_.end(), t) - grid_.begin()));
        leaf.cumhaz.push_back(h);
      }
      at_risk -= static_cast<double>(end - start);
      start = end;
    }
    for (std::size_t k = 0; k < leaf.grid_index.size(); ++k) {
      const std::size_t until = k + 1 < leaf.grid_index.size() ? leaf.grid_index[k + 1] : grid_.size();
      leaf.mortality += leaf.cumhaz[k] * static_cast<double>(until - leaf.grid_index[k]);
    }
    return leaf;
  }

  const Eigen::MatrixXd& x_;
  std::span<const SurvivalLabel> labels_;
  const std::vector<double>& grid_;
  std::size_t mtry_;
  std::size_t min_leaf_;
  Rng rng_;
  SurvivalTree tree_;
};

}  // namespace

ForestModel fit_forest(const Eigen::MatrixXd& x_in, std::span<const SurvivalLabel> labels_in,
                       const RsfParams& params) {
  const auto n = static_cast<std::size_t>(x_in.rows());
  const auto d = static_cast<std::size_t>(x_in.cols());
  if (n != labels_in.size()) fail(ErrorKind::DimensionMismatch, "X rows do not match labels");
  if (n == 0 || d == 0) fail(ErrorKind::DegenerateData, "forest needs at least one row and one feature");
  if (!x_in.allFinite()) fail(ErrorKind::DegenerateData, "non-finite feature value");
  if (params.n_trees < 1) fail(ErrorKind::InvalidInput, "n_trees must be at least 1");
  if (params.min_leaf_size < 1) fail(ErrorKind::InvalidInput, "min_leaf_size must be at least 1");
  if (params.mtry > d) fail(ErrorKind::InvalidInput, "mtry exceeds the feature count");
  if (std::none_of(labels_in.begin(), labels_in.end(), [](const auto& l) { return l.event; })) {
    fail(ErrorKind::NoEvents, "forest needs at least one event");
  }

  // Canonical row order: by time, then event flag, then feature values.
  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    if (labels_in[a].time_days != labels_in[b].time_days) return labels_in[a].time_days < labels_in[b].time_days;
    if (labels_in[a].event != labels_in[b].event) return labels_in[a].event < labels_in[b].event;
    for (std::size_t k = 0; k < d; ++k) {
      const double va = x_in(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k));
      const double vb = x_in(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
      if (va != vb) return va < vb;
    }
    return false;
  });
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<SurvivalLabel> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.row(static_cast<Eigen::Index>(i)) = x_in.row(static_cast<Eigen::Index>(canon[i]));
    labels[i] = labels_in[canon[i]];
  }

  ForestModel model;
  model.params = params;
  model.params.mtry = params.mtry == 0
                          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                          : params.mtry;
  model.n_features = d;
  for (const auto& l : labels) {
    if (l.event) model.event_time_grid.push_back(l.time_days);
  }
  std::sort(model.event_time_grid.begin(), model.event_time_grid.end());
  model.event_time_grid.erase(std::unique(model.event_time_grid.begin(), model.event_time_grid.end()),
                              model.event_time_grid.end());

  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, static_cast<std::uint64_t>(t));
    Rng boot(tree_seed);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = static_cast<std::size_t>(boot.below(n));
    TreeBuilder builder(x, labels, model.event_time_grid, model.params.mtry, params.min_leaf_size,
                        derive_seed(tree_seed, 1));
    model.trees.push_back(builder.build(std::move(sample)));
  }
  return model;
}

double predict_risk(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    fail(ErrorKind::DimensionMismatch, "forest expects " + std::to_string(model.n_features) +
                                           " features, got " + std::to_string(x.size()));
  }
  double total = 0.0;
  for (const auto& tree : model.trees) total += tree.route(x).mortality;
  return total / static_cast<double>(model.trees.size());
}

std::vector<double> predict_risk(const ForestModel& model, const Eigen::MatrixXd& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) row[static_cast<std::size_t>(k)] = x(i, k);
    out[static_cast<std::size_t>(i)] = predict_risk(model, row);
  }
  return out;
}

}  // namespace survfuse
