#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "landmark/preprocess.hpp"
#include "landmark/rng.hpp"
#include "landmark/step_curve.hpp"

namespace landmark {

struct TreeParams {
  size_t min_node_size = 15;
  size_t mtry = 0;  // 0 -> ceil(sqrt(#candidates))
  // When true, mtry counts raw variables instead of design columns: a
  // longitudinal marker contributes all its occasion columns as one
  // candidate, so a sampled marker competes with its whole trajectory.
  bool mtry_by_variable = false;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double cutoff = 0.0;  // x[feature] <= cutoff goes left
  int left = -1, right = -1;
  double split_stat = 0.0;               // log-rank chi-square of this split
  std::vector<uint32_t> members;         // leaf only; training indices, bootstrap repeats kept
};

struct SurvivalTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  TreeParams params;

  bool is_leaf(size_t id) const { return nodes[id].feature < 0; }
  size_t route(const double* x) const {
    size_t id = 0;
    while (!is_leaf(id)) {
      const TreeNode& nd = nodes[id];
      id = x[nd.feature] <= nd.cutoff ? nd.left : nd.right;
    }
    return id;
  }
  size_t n_splits() const {
    size_t c = 0;
    for (const auto& nd : nodes)
      if (nd.feature >= 0) ++c;
    return c;
  }
};

// Standardized two-sample log-rank statistic on residual times between the
// children {x <= cutoff} and {x > cutoff} of the given member multiset.
// Returns nullopt when a child falls below min_node_size (infeasible split).
std::optional<double> logrank_split_statistic(const LandmarkDataset& ds,
                                              const std::vector<uint32_t>& members,
                                              size_t feature, double cutoff,
                                              size_t min_node_size = 1);

// Standardized log-rank for explicit (time, event, group) samples; the
// reference implementation behind the sweep in grow.
double logrank_two_sample(const std::vector<double>& time, const std::vector<uint8_t>& event,
                          const std::vector<uint8_t>& in_group1);

// Grows a tree on the member multiset (bootstrap repeats included).
// Deterministic given the rng state; each split maximizes the log-rank
// statistic over mtry sampled features, ties broken by lowest feature index
// then smallest cutoff.
SurvivalTree grow(const LandmarkDataset& ds, std::vector<uint32_t> members,
                  const TreeParams& params, Rng& rng);

// Convenience: grow on the full at-risk sample without resampling.
SurvivalTree grow(const LandmarkDataset& ds, const TreeParams& params, uint64_t seed);

// Split-complexity pruning: the rooted subtree maximizing
// sum(split stats) - alpha * #splits.
SurvivalTree prune_at_alpha(const SurvivalTree& tree, double alpha);

// Picks alpha by k-fold cross-validated split-complexity and prunes.
SurvivalTree prune(const SurvivalTree& tree, const LandmarkDataset& ds, size_t folds,
                   uint64_t seed);

// Node-level estimator: exponentiated Nelson-Aalen over the members of the
// leaf containing the query.
StepSurvivalCurve node_survival(const SurvivalTree& tree, const LandmarkDataset& ds,
                                const std::vector<double>& query);

// Weighted Nelson-Aalen over the whole training sample (weights may be 0);
// uses the dataset's precomputed residual-time order.
StepSurvivalCurve weighted_nelson_aalen(const LandmarkDataset& ds,
                                        const std::vector<double>& weights);

// Nelson-Aalen over a member multiset (each occurrence weight 1).
StepSurvivalCurve member_nelson_aalen(const LandmarkDataset& ds,
                                      const std::vector<uint32_t>& members);

}  // namespace landmark
