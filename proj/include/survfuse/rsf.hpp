#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "survfuse/dataset.hpp"

namespace survfuse {

struct RsfParams {
  int n_trees = 100;
  /// Features tried per node; 0 means ceil(sqrt(d)).
  std::size_t mtry = 0;
  std::size_t min_leaf_size = 15;
  std::uint64_t seed = 0;
};

/// Nelson-Aalen cumulative hazard of one leaf, stored as its jumps on the
/// forest's event-time grid: cumhaz[k] holds from grid_index[k] onwards.
struct LeafHazard {
  std::vector<std::size_t> grid_index;
  std::vector<double> cumhaz;
  /// Sum of the cumulative hazard over every grid time.
  double mortality = 0.0;

  double at(std::size_t grid_pos) const;
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;  ///< x[feature] <= threshold
  int right = -1;
  int leaf = -1;  ///< index into SurvivalTree::leaves
};

struct SurvivalTree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root
  std::vector<LeafHazard> leaves;

  const LeafHazard& route(std::span<const double> x) const;
};

struct ForestModel {
  std::vector<SurvivalTree> trees;
  RsfParams params;
  std::vector<double> event_time_grid;
  std::size_t n_features = 0;
};

/// |O - E| / sqrt(V) of the two-sample log-rank statistic for the left group.
double logrank_split_score(std::span<const SurvivalLabel> left, std::span<const SurvivalLabel> right);

/// Each tree grows on a bootstrap resample with seed derive_seed(seed, tree).
/// Training rows are put in a canonical order first, so the fit does not
/// depend on the order in which records are supplied.
ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const SurvivalLabel> labels,
                       const RsfParams& params = {});

/// Ensemble mortality: mean over trees of the leaf's summed cumulative hazard.
double predict_risk(const ForestModel& model, std::span<const double> x);
std::vector<double> predict_risk(const ForestModel& model, const Eigen::MatrixXd& x);

}  // namespace survfuse
