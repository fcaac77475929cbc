#pragma once

#include <cstdint>

#include "ibug/dataset.hpp"
#include "ibug/ensemble.hpp"

namespace ibug {

struct TrainConfig {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;  // <= 0 means unlimited
  int min_leaf_size = 1;
  double lambda = 0.0;
  double subsample_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Squared-error gradient boosting with exact greedy splits and one-step
/// Newton leaf values sum(y - yhat) / (count + lambda). Single-threaded and
/// deterministic given the seed.
Ensemble train(const Dataset& data, const TrainConfig& config);

}  // namespace ibug
