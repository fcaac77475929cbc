#pragma once

#include <vector>

#include "ibug/dataset.hpp"
#include "ibug/posterior.hpp"
#include "ibug/trainer.hpp"

namespace ibug {

struct KnnBaselineConfig {
  std::size_t k_mean = 1;
  std::size_t k_var = 2;
  std::size_t n_top_features = 5;
  double rho = kDefaultMinVariance;
};

struct KnnGrid {
  std::vector<std::size_t> k_grid;          // shared by k_mean and k_var
  std::vector<std::size_t> top_feature_grid = {5, 10, 20};
};

/// Euclidean nearest neighbors in a standardized subspace of the most
/// important features. Standardization statistics come from the reference set
/// only; missing values are imputed with the reference mean.
class KnnModel {
 public:
  /// `feature_order` ranks feature columns, most important first.
  KnnModel(const Dataset& reference, std::vector<std::size_t> feature_order, std::size_t n_top);

  /// Reference ids sorted by (distance asc, id asc).
  std::vector<std::uint32_t> neighbor_order(std::span<const double> x) const;

  const std::vector<double>& targets() const { return targets_; }
  std::size_t n_reference() const { return targets_.size(); }

 private:
  std::vector<std::size_t> columns_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<double> points_;  // row-major standardized reference rows
  std::vector<double> targets_;
};

struct KnnTuneResult {
  KnnBaselineConfig config;
  double val_nll = 0.0;
};

/// Tunes (n_top_features, k_mean, k_var) on validation NLL with normal
/// predictions; feature ranking from a GBRT trained on `train`.
KnnTuneResult tune_knn(const Dataset& train, const Dataset& val, const KnnGrid& grid,
                       const TrainConfig& importance_model);

/// Normal predictions for every row of `test` using `train` as the reference.
std::vector<ProbabilisticPrediction> predict_knn(const Dataset& train, const Dataset& test,
                                                 const KnnBaselineConfig& cfg,
                                                 const TrainConfig& importance_model);

/// tune_knn on (train, val), then predict_knn on test with train as reference.
std::vector<ProbabilisticPrediction> knn_baseline(const Dataset& train, const Dataset& val,
                                                  const Dataset& test, const KnnGrid& grid,
                                                  const TrainConfig& importance_model);

}  // namespace ibug
