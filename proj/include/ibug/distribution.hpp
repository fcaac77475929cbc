#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ibug {

enum class DistributionFamily {
  kNormal,
  kSkewNormal,
  kLogNormal,
  kLaplace,
  kStudentT,
  kLogistic,
  kGumbel,
  kWeibull,
  kKde,
};

/// All nine families in selection order (normal first).
const std::vector<DistributionFamily>& all_families();
DistributionFamily parse_family(std::string_view tag);
std::string_view to_string(DistributionFamily family);

/// A fitted univariate continuous distribution. Immutable after construction.
class FittedDistribution {
 public:
  /// Standard normal.
  FittedDistribution() = default;

  static FittedDistribution normal(double loc, double scale);
  static FittedDistribution laplace(double loc, double scale);
  static FittedDistribution logistic(double loc, double scale);
  /// Right-skewed (maximum) Gumbel; cdf(loc) = exp(-1).
  static FittedDistribution gumbel(double loc, double scale);
  static FittedDistribution student_t(double loc, double scale, double df);
  static FittedDistribution skew_normal(double loc, double scale, double shape);
  /// exp(N(mu_log, sigma_log^2)) + shift
  static FittedDistribution log_normal(double mu_log, double sigma_log, double shift = 0.0);
  static FittedDistribution weibull(double shape, double scale, double shift = 0.0);
  /// Equal-weight Gaussian mixture with a common bandwidth.
  static FittedDistribution kde(std::vector<double> centers, double bandwidth);

  DistributionFamily family() const { return family_; }

  double pdf(double y) const;
  double cdf(double y) const;
  /// Inverse cdf; returns the support bounds at p = 0 and p = 1.
  double quantile(double p) const;
  double mean() const;
  double variance() const;
  double stddev() const;
  std::pair<double, double> support() const;

  /// Named parameters for reporting, in a fixed order per family.
  std::vector<std::pair<std::string, double>> params() const;

  const std::vector<double>& kde_centers() const { return centers_; }

 private:
  FittedDistribution(DistributionFamily family, double a, double b, double c, double shift)
      : family_(family), a_(a), b_(b), c_(c), shift_(shift) {}

  double kde_quantile(double p) const;

  DistributionFamily family_ = DistributionFamily::kNormal;
  // Family parameters: location-scale families use (a = loc, b = scale),
  // student-t adds c = df, skewnormal adds c = shape, lognormal uses
  // (a = mu_log, b = sigma_log), weibull uses (a = shape, b = scale), kde
  // uses b = bandwidth.
  double a_ = 0.0;
  double b_ = 1.0;
  double c_ = 0.0;
  double shift_ = 0.0;
  std::vector<double> centers_;
};

}  // namespace ibug
