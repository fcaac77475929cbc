#pragma once

#include <string>
#include <vector>

#include "ibug/dataset.hpp"
#include "ibug/distribution.hpp"
#include "ibug/ensemble.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/metrics.hpp"
#include "ibug/posterior.hpp"

namespace ibug {

struct CandidateGrids {
  std::vector<std::size_t> k_grid;
  std::vector<double> gamma_grid;
  std::vector<double> delta_grid;
  std::vector<DistributionFamily> family_grid;
  Metric metric = Metric::kNll;
};

/// 3, 5, 7, 9, 11, 15, 31, 61, ..., 701 clipped to k <= n_train.
std::vector<std::size_t> default_k_grid(std::size_t n_train);
/// {1e-8, ..., 1e3} x {1.0, 2.5, 5.0}; the delta grid also contains 0.
std::vector<double> default_gamma_grid();
std::vector<double> default_delta_grid();
CandidateGrids default_grids(std::size_t n_train);

/// Mean and standard error of one candidate over the validation set.
struct CandidateScore {
  double mean = 0.0;
  double std_error = 0.0;
};

struct KTuneResult {
  std::size_t k = 0;
  double rho = kDefaultMinVariance;
  std::vector<std::size_t> k_grid;
  std::vector<CandidateScore> k_scores;            // per grid entry
  std::vector<std::vector<double>> instance_scores;  // [validation row][grid entry]
  std::vector<std::vector<double>> raw_variances;    // unfloored sample variances
};

/// Computes each validation row's affinities once, sorts them once, and
/// scores every k in the grid from that one ordering (normal family, no
/// calibration, variance floor 1e-15). Picks the lowest mean score with ties
/// to the smaller k; rho is the smallest non-zero variance at that k.
KTuneResult fast_tune_k(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                        const CandidateGrids& grids, std::span<const std::size_t> trees);

struct CalibrationCandidate {
  double gamma = 1.0;
  double delta = 0.0;
  CandidateScore score;
};

struct CalibrationResult {
  double gamma = 1.0;
  double delta = 0.0;
  std::vector<CalibrationCandidate> candidates;  // identity first
};

/// Searches (gamma, 0) and (1, delta) with the normal family. The identity is
/// evaluated first and only a strictly better mean replaces it.
CalibrationResult tune_calibration(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                                   std::span<const std::size_t> trees, std::size_t k, double rho,
                                   const CandidateGrids& grids);

struct FamilyScore {
  DistributionFamily family;
  CandidateScore nll;
  std::size_t failures = 0;
  bool disqualified = false;
};

struct FamilySelection {
  DistributionFamily family = DistributionFamily::kNormal;
  std::vector<FamilyScore> scores;
};

/// Lowest mean validation NLL; a family whose fit fails on more than 1% of
/// the rows is disqualified. Throws FitError if every family is.
FamilySelection select_family(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                              std::span<const std::size_t> trees, const PosteriorConfig& cfg,
                              std::span<const DistributionFamily> families);

struct TuneResult {
  PosteriorConfig config;
  KTuneResult k_tuning;
  CalibrationResult calibration;
  FamilySelection family_selection;
  CandidateScore validation_nll;   // final config on the validation set
  CandidateScore validation_crps;
};

/// fast_tune_k, then tune_calibration, then select_family, then scores the
/// chosen configuration on the validation set.
TuneResult tune(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                std::span<const std::size_t> trees, const CandidateGrids& grids);

/// Tune report: grids, per-candidate mean and standard error, chosen values.
std::string tune_report_json(const TuneResult& result, const CandidateGrids& grids);

}  // namespace ibug
