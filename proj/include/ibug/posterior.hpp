#pragma once

#include <span>
#include <vector>

#include "ibug/affinity.hpp"
#include "ibug/distribution.hpp"
#include "ibug/ensemble.hpp"
#include "ibug/leaf_index.hpp"

namespace ibug {

/// Variance floor used before any tuning has happened.
inline constexpr double kDefaultMinVariance = 1e-15;

struct PosteriorConfig {
  std::size_t k = 20;
  double rho = kDefaultMinVariance;
  double gamma = 1.0;
  double delta = 0.0;
  DistributionFamily family = DistributionFamily::kNormal;

  void validate() const;
};

/// Unbiased (k - 1) sample variance. Needs at least two values.
double sample_variance(std::span<const double> values);

/// max(sample variance of the neighbor targets, rho).
double raw_variance(const NeighborSet& neighbors, double rho);

/// gamma * sigma2 + delta; throws InvalidInput unless the result is positive.
double calibrate_variance(double sigma2, double gamma, double delta);

/// Silverman's rule 0.9 * min(sd, IQR / 1.34) * k^(-1/5), falling back to the
/// non-zero spread estimate, then to `fallback_sd`, for degenerate samples.
double silverman_bandwidth(std::span<const double> values, double fallback_sd);

/// Fits `family` to the neighbor targets with mean `mu` and variance `sigma2`
/// fixed where the family allows it. Throws FitError when a fit fails.
FittedDistribution fit_distribution(DistributionFamily family, const NeighborSet& neighbors,
                                    double mu, double sigma2);

struct ProbabilisticPrediction {
  double mu = 0.0;
  double sigma2 = 0.0;
  FittedDistribution dist;
};

/// Full pipeline for one target instance: point prediction, affinities,
/// top-k neighbors, floored and calibrated variance, distribution fit.
ProbabilisticPrediction predict_probabilistic(std::span<const double> x, const Ensemble& model,
                                              const LeafIndex& index,
                                              std::span<const std::size_t> trees,
                                              const PosteriorConfig& cfg);

/// predict_probabilistic for every probe row, parallel over rows. Rethrows the
/// error of the lowest failing row.
std::vector<ProbabilisticPrediction> predict_probabilistic_batch(
    const Dataset& probes, const Ensemble& model, const LeafIndex& index,
    std::span<const std::size_t> trees, const PosteriorConfig& cfg);

}  // namespace ibug
