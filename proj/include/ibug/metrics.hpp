#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibug/distribution.hpp"

namespace ibug {

enum class Metric { kNll, kCrps };

Metric parse_metric(std::string_view tag);
std::string_view to_string(Metric metric);

/// -log pdf(y), with the density floored at 1e-300.
double nll(const FittedDistribution& dist, double y);

/// Continuous ranked probability score. Closed form for the normal family,
/// crps_quadrature for everything else.
double crps(const FittedDistribution& dist, double y);

/// CRPS by adaptive trapezoid quadrature of (F(t) - 1[t >= y])^2 over
/// [q(1e-6), q(1 - 1e-6)] extended to include y. Throws NumericError if the
/// quadrature does not converge.
double crps_quadrature(const FittedDistribution& dist, double y, double abs_tol = 1e-6);

double score(Metric metric, const FittedDistribution& dist, double y);

/// Levels 0.05, 0.10, ..., 0.95.
std::vector<double> default_quantile_levels();

/// Mean pinball loss over the quantile levels.
double check_score(const FittedDistribution& dist, double y, std::span<const double> levels);
double check_score(const FittedDistribution& dist, double y);

/// Width of the central (1 - alpha) interval plus 2/alpha times the miss.
double interval_score(const FittedDistribution& dist, double y, double alpha = 0.1);

struct CalibrationDiagnostics {
  double mace = 0.0;
  double sharpness = 0.0;
};

/// MACE over central-interval coverage levels 0.05, ..., 0.95 and mean
/// predicted standard deviation. Needs at least 20 instances.
CalibrationDiagnostics calibration_diagnostics(std::span<const FittedDistribution> dists,
                                               std::span<const double> ys);

double rmse(std::span<const double> preds, std::span<const double> ys);

struct ScoreSummary {
  std::string metric;
  std::vector<double> scores;
  double mean = 0.0;
  double std_error = 0.0;
};

/// Arithmetic mean and sd / sqrt(m), with the sample (m - 1) sd.
ScoreSummary summarize(std::string metric, std::vector<double> scores);

}  // namespace ibug
