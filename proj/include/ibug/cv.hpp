#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ibug/affinity.hpp"
#include "ibug/dataset.hpp"
#include "ibug/knn_baseline.hpp"
#include "ibug/metrics.hpp"
#include "ibug/trainer.hpp"
#include "ibug/tuning.hpp"

namespace ibug {

struct Protocol {
  std::size_t n_folds = 10;
  double test_fraction = 0.1;  // must equal 1 / n_folds
  double val_fraction_of_train = 0.2;
  std::uint64_t seed = 0;
  Metric metric = Metric::kNll;

  void validate() const;
};

enum class Method { kIbugNative, kIbugExternalModel, kKnnBaseline };

Method parse_method(std::string_view tag);
std::string_view to_string(Method method);

struct CvConfig {
  Protocol protocol;
  Method method = Method::kIbugNative;
  CandidateGrids grids;  // empty k_grid / families mean defaults
  TrainConfig train_config;
  TreeSubset trees;
  std::optional<Ensemble> external_model;  // required by kIbugExternalModel
  KnnGrid knn_grid;
};

/// Per-instance test record.
struct TestRecord {
  std::size_t row = 0;  // row in the full dataset
  double y = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
  double crps = 0.0;
  double check = 0.0;
  double interval = 0.0;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  PosteriorConfig chosen;          // ibug methods
  KnnBaselineConfig knn_chosen;    // kNN baseline
  std::vector<TestRecord> records;
  std::vector<ScoreSummary> summaries;  // nll, crps, check, interval, rmse, mace, sharpness
};

/// Disjoint test folds covering 0..n-1, each sorted.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t n_folds, std::uint64_t seed);

/// Per-fold seed for the inner train/validation split.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

/// Cross-validated benchmark. Per fold: split, tune on the inner validation
/// split, refit on the full training part, score the test fold. Folds run in
/// parallel; results are ordered by fold.
std::vector<FoldResult> run_cv(const Dataset& data, const CvConfig& config);

/// Metric names present in every summary.
const std::vector<std::string>& summary_metrics();

/// Versioned summary JSON: per metric, mean and standard error across folds.
std::string summary_json(const std::vector<FoldResult>& folds, const CvConfig& config);

/// One row per test instance per per-instance metric.
std::string scores_csv(const std::vector<FoldResult>& folds);

}  // namespace ibug
