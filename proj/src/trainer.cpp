#include "ibug/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ibug/error.hpp"

namespace ibug {

void TrainConfig::validate() const {
  if (n_trees < 0) throw InvalidInput("n_trees must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
  if (min_leaf_size < 1) throw InvalidInput("min_leaf_size must be at least 1");
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
    throw InvalidInput("subsample_fraction must lie in (0, 1]");
}

namespace {

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool missing_goes_left = true;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<double>& residuals, const TrainConfig& cfg)
      : data_(data), residuals_(residuals), cfg_(cfg) {}

  Tree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    next_leaf_ = 0;
    grow(rows, 0);
    return Tree(std::move(nodes_));
  }

 private:
  double leaf_value(double sum, std::size_t count) const {
    return sum / (static_cast<double>(count) + cfg_.lambda);
  }

  double score(double sum, double count) const { return sum * sum / (count + cfg_.lambda); }

  std::int32_t grow(const std::vector<std::size_t>& rows, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += residuals_[r];

    const bool depth_ok = cfg_.max_depth <= 0 || depth < cfg_.max_depth;
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf_size);
    Split best;
    if (depth_ok && rows.size() >= 2 * min_leaf) best = find_split(rows, sum);

    if (best.feature < 0) {
      nodes_[id].leaf_id = next_leaf_++;
      nodes_[id].value = leaf_value(sum, rows.size());
      return id;
    }

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      const double v = data_.at(r, best.feature);
      const bool go_left = is_missing(v) ? best.missing_goes_left : v <= best.threshold;
      (go_left ? left : right).push_back(r);
    }
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    nodes_[id].missing_goes_left = best.missing_goes_left;
    nodes_[id].gain = best.gain;
    const std::int32_t l = grow(left, depth + 1);
    const std::int32_t r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Exact greedy search. Strict improvement while scanning features and
  // thresholds in ascending order keeps the lowest (feature, threshold) on ties.
  Split find_split(const std::vector<std::size_t>& rows, double total_sum) {
    const auto min_leaf = static_cast<double>(cfg_.min_leaf_size);
    const double total_count = static_cast<double>(rows.size());
    const double parent = score(total_sum, total_count);
    Split best;
    std::vector<std::pair<double, double>> present;  // (feature value, residual)
    present.reserve(rows.size());

    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      present.clear();
      double missing_sum = 0.0;
      double missing_count = 0.0;
      for (std::size_t r : rows) {
        const double v = data_.at(r, f);
        if (is_missing(v)) {
          missing_sum += residuals_[r];
          missing_count += 1.0;
        } else {
          present.emplace_back(v, residuals_[r]);
        }
      }
      if (present.size() < 2) continue;
      std::stable_sort(present.begin(), present.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });

      double prefix_sum = 0.0;
      double prefix_count = 0.0;
      for (std::size_t i = 0; i + 1 < present.size(); ++i) {
        prefix_sum += present[i].second;
        prefix_count += 1.0;
        const double lo = present[i].first;
        const double hi = present[i + 1].first;
        if (!(lo < hi)) continue;
        for (int side = 0; side < (missing_count > 0.0 ? 2 : 1); ++side) {
          const bool missing_left = side == 0;
          const double ls = prefix_sum + (missing_left ? missing_sum : 0.0);
          const double lc = prefix_count + (missing_left ? missing_count : 0.0);
          const double rs = total_sum - ls;
          const double rc = total_count - lc;
          if (lc < min_leaf || rc < min_leaf) continue;
          const double gain = score(ls, lc) + score(rs, rc) - parent;
          if (gain > best.gain) {
            best.gain = gain;
            best.feature = static_cast<std::int32_t>(f);
            best.missing_goes_left = missing_left;
            double mid = lo + (hi - lo) / 2.0;
            if (!(mid >= lo && mid < hi)) mid = lo;
            best.threshold = mid;
          }
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  const std::vector<double>& residuals_;
  const TrainConfig& cfg_;
  std::vector<TreeNode> nodes_;
  std::int32_t next_leaf_ = 0;
};

}  // namespace

Ensemble train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw InvalidInput("cannot train on an empty dataset");
  const std::size_t n = data.n_rows();
  if (n < static_cast<std::size_t>(config.min_leaf_size))
    throw InvalidInput("dataset is smaller than min_leaf_size");
  for (double y : data.targets()) {
    if (!std::isfinite(y)) throw InvalidInput("non-finite target");
  }

  const auto& y = data.targets();
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> pred(n, base);
  std::vector<double> residuals(n);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_trees));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto n_sample = std::max<std::size_t>(
      static_cast<std::size_t>(config.min_leaf_size),
      static_cast<std::size_t>(std::llround(config.subsample_fraction * static_cast<double>(n))));

  TreeBuilder builder(data, residuals, config);
  for (int t = 0; t < config.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residuals[i] = y[i] - pred[i];
    std::vector<std::size_t> rows;
    if (n_sample >= n) {
      rows = all;
    } else {
      std::vector<std::size_t> perm = all;
      std::shuffle(perm.begin(), perm.end(), rng);
      rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_sample));
      std::sort(rows.begin(), rows.end());
    }
    Tree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) pred[i] += config.learning_rate * tree.leaf_value(data.row(i));
    trees.push_back(std::move(tree));
  }
  return Ensemble(data.n_features(), base, config.learning_rate, config.lambda, std::move(trees));
}

}  // namespace ibug
