#include "ibug/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ibug/error.hpp"
#include "ibug/parallel.hpp"

namespace ibug {

Tree::Tree(std::vector<TreeNode> nodes, std::vector<std::int64_t> source_leaf_ids)
    : nodes_(std::move(nodes)), source_leaf_ids_(std::move(source_leaf_ids)) {
  n_leaves_ = validate();
}

Tree Tree::constant(double value) {
  TreeNode leaf;
  leaf.leaf_id = 0;
  leaf.value = value;
  return Tree({leaf});
}

std::size_t Tree::validate() const {
  if (nodes_.empty()) throw InvalidInput("tree has no nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  std::vector<char> seen_leaf;
  std::vector<int> parents(nodes_.size(), 0);
  std::size_t leaves = 0;
  for (std::int32_t i = 0; i < n; ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) {
      ++leaves;
      continue;
    }
    if (node.left <= i || node.right <= i || node.left >= n || node.right >= n)
      throw InvalidInput("tree node " + std::to_string(i) + " has invalid children");
    if (std::isnan(node.threshold))
      throw InvalidInput("tree node " + std::to_string(i) + " has a NaN threshold");
    ++parents[node.left];
    ++parents[node.right];
  }
  for (std::int32_t i = 1; i < n; ++i) {
    if (parents[i] != 1) throw InvalidInput("tree nodes do not form a tree");
  }
  seen_leaf.assign(leaves, 0);
  for (const TreeNode& node : nodes_) {
    if (!node.is_leaf()) continue;
    if (node.leaf_id < 0 || static_cast<std::size_t>(node.leaf_id) >= leaves ||
        seen_leaf[node.leaf_id])
      throw InvalidInput("leaf ids are not dense");
    seen_leaf[node.leaf_id] = 1;
  }
  if (!source_leaf_ids_.empty() && source_leaf_ids_.size() != leaves)
    throw InvalidInput("leaf translation table has the wrong size");
  return leaves;
}

int Tree::max_feature_index() const {
  int m = -1;
  for (const TreeNode& node : nodes_) m = std::max(m, static_cast<int>(node.feature));
  return m;
}

Ensemble::Ensemble(std::size_t n_features, double base_score, double learning_rate,
                   double lambda, std::vector<Tree> trees, Accumulation accumulation)
    : n_features_(n_features),
      base_score_(base_score),
      learning_rate_(learning_rate),
      lambda_(lambda),
      trees_(std::move(trees)),
      accumulation_(accumulation) {
  if (n_features_ == 0) throw InvalidInput("ensemble needs at least one feature");
  if (!(learning_rate_ > 0.0)) throw InvalidInput("learning rate must be positive");
  if (!(lambda_ >= 0.0)) throw InvalidInput("lambda must be non-negative");
  if (!std::isfinite(base_score_)) throw InvalidInput("base score must be finite");
  for (const Tree& t : trees_) {
    if (t.max_feature_index() >= static_cast<int>(n_features_))
      throw InvalidInput("tree splits on a feature beyond n_features");
  }
}

void Ensemble::check_row(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw InvalidInput("expected " + std::to_string(n_features_) + " features, got " +
                       std::to_string(x.size()));
}

double Ensemble::predict(std::span<const double> x) const {
  check_row(x);
  if (accumulation_ == Accumulation::kFloat32) {
    auto total = static_cast<float>(base_score_);
    for (const Tree& t : trees_) total += static_cast<float>(learning_rate_ * t.leaf_value(x));
    return total;
  }
  double sum = 0.0;
  for (const Tree& t : trees_) sum += t.leaf_value(x);
  return base_score_ + learning_rate_ * sum;
}

std::vector<std::int32_t> Ensemble::leaf_path(std::span<const double> x,
                                              std::span<const std::size_t> tree_ids) const {
  check_row(x);
  std::vector<std::int32_t> out;
  out.reserve(tree_ids.size());
  for (std::size_t t : tree_ids) {
    if (t >= trees_.size())
      throw InvalidInput("tree index " + std::to_string(t) + " out of range");
    out.push_back(trees_[t].leaf_id(x));
  }
  return out;
}

std::vector<std::int32_t> Ensemble::leaf_path(std::span<const double> x) const {
  std::vector<std::size_t> all(trees_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return leaf_path(x, all);
}

std::vector<double> Ensemble::feature_importance() const {
  std::vector<double> gain(n_features_, 0.0);
  for (const Tree& t : trees_) {
    for (const TreeNode& node : t.nodes()) {
      if (!node.is_leaf()) gain[node.feature] += std::max(0.0, node.gain);
    }
  }
  return gain;
}

std::vector<double> predict_all(const Ensemble& model, const Dataset& data) {
  if (data.n_features() != model.n_features())
    throw InvalidInput("dataset feature count does not match the model");
  std::vector<double> out(data.n_rows());
  parallel_for(data.n_rows(), [&](std::size_t i) { out[i] = model.predict(data.row(i)); });
  return out;
}

std::vector<std::size_t> top_features(const Ensemble& model, std::size_t k) {
  const auto gain = model.feature_importance();
  std::vector<std::size_t> order(gain.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

}  // namespace ibug
