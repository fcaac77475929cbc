#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ibug/dataset.hpp"

namespace ibug {

/// One node of a regression tree. Internal nodes send x to `left` when
/// x[feature] <= threshold; missing values follow `missing_goes_left`.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_goes_left = true;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf_id = -1;
  double value = 0.0;  // leaf value (unshrunk)
  double gain = 0.0;   // split gain, used for feature importance

  bool is_leaf() const { return feature < 0; }
};

/// Flat pre-order node array; node 0 is the root.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes, std::vector<std::int64_t> source_leaf_ids = {});

  /// A tree with a single leaf.
  static Tree constant(double value);

  std::int32_t leaf_index(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const TreeNode& n = nodes_[i];
      const double v = x[n.feature];
      const bool go_left = is_missing(v) ? n.missing_goes_left : v <= n.threshold;
      i = go_left ? n.left : n.right;
    }
    return i;
  }
  std::int32_t leaf_id(std::span<const double> x) const { return nodes_[leaf_index(x)].leaf_id; }
  double leaf_value(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }

  std::size_t n_leaves() const { return n_leaves_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int max_feature_index() const;

  /// Per dense leaf id, the id used by the source format (empty for native trees).
  const std::vector<std::int64_t>& source_leaf_ids() const { return source_leaf_ids_; }

 private:
  std::size_t validate() const;  // returns the leaf count

  std::vector<TreeNode> nodes_;
  std::vector<std::int64_t> source_leaf_ids_;
  std::size_t n_leaves_ = 0;
};

/// How predict() sums tree outputs. kFloat32 adds each tree's output to a
/// single-precision running total that starts at the base score, which is
/// how XGBoost produces its raw scores.
enum class Accumulation { kDouble, kFloat32 };

/// Additive tree ensemble: f(x) = base_score + learning_rate * sum_t tree_t(x).
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::size_t n_features, double base_score, double learning_rate, double lambda,
           std::vector<Tree> trees, Accumulation accumulation = Accumulation::kDouble);

  std::size_t n_features() const { return n_features_; }
  std::size_t n_trees() const { return trees_.size(); }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  double lambda() const { return lambda_; }
  Accumulation accumulation() const { return accumulation_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const Tree& tree(std::size_t t) const { return trees_[t]; }

  /// Throws InvalidInput on a dimensionality mismatch.
  double predict(std::span<const double> x) const;

  /// Leaf id of `x` in each listed tree, in the order given.
  std::vector<std::int32_t> leaf_path(std::span<const double> x,
                                      std::span<const std::size_t> tree_ids) const;
  std::vector<std::int32_t> leaf_path(std::span<const double> x) const;

  /// Total split gain per feature.
  std::vector<double> feature_importance() const;

  void check_row(std::span<const double> x) const;

 private:
  std::size_t n_features_ = 0;
  double base_score_ = 0.0;
  double learning_rate_ = 1.0;
  double lambda_ = 0.0;
  std::vector<Tree> trees_;
  Accumulation accumulation_ = Accumulation::kDouble;
};

/// Point predictions for every row, parallel over rows.
std::vector<double> predict_all(const Ensemble& model, const Dataset& data);

/// The `k` features with the largest gain, ties to the lower index.
std::vector<std::size_t> top_features(const Ensemble& model, std::size_t k);

}  // namespace ibug
