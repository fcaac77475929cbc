#include "ibug/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/extreme_value.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/logistic.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/skew_normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/weibull.hpp>

#include "ibug/error.hpp"

namespace ibug {

namespace bm = boost::math;
using Policy = bm::policies::policy<bm::policies::overflow_error<bm::policies::ignore_error>>;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(what) + " must be positive and finite");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " must be finite");
}

}  // namespace

const std::vector<DistributionFamily>& all_families() {
  static const std::vector<DistributionFamily> kAll = {
      DistributionFamily::kNormal,   DistributionFamily::kSkewNormal, DistributionFamily::kLogNormal,
      DistributionFamily::kLaplace,  DistributionFamily::kStudentT,   DistributionFamily::kLogistic,
      DistributionFamily::kGumbel,   DistributionFamily::kWeibull,    DistributionFamily::kKde};
  return kAll;
}

DistributionFamily parse_family(std::string_view tag) {
  for (DistributionFamily f : all_families()) {
    if (to_string(f) == tag) return f;
  }
  throw InvalidInput("unknown distribution family '" + std::string(tag) + "'");
}

std::string_view to_string(DistributionFamily family) {
  switch (family) {
    case DistributionFamily::kNormal: return "normal";
    case DistributionFamily::kSkewNormal: return "skewnormal";
    case DistributionFamily::kLogNormal: return "lognormal";
    case DistributionFamily::kLaplace: return "laplace";
    case DistributionFamily::kStudentT: return "student-t";
    case DistributionFamily::kLogistic: return "logistic";
    case DistributionFamily::kGumbel: return "gumbel";
    case DistributionFamily::kWeibull: return "weibull";
    case DistributionFamily::kKde: return "kde";
  }
  return "unknown";
}

FittedDistribution FittedDistribution::normal(double loc, double scale) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  return {DistributionFamily::kNormal, loc, scale, 0.0, 0.0};
}

FittedDistribution FittedDistribution::laplace(double loc, double scale) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  return {DistributionFamily::kLaplace, loc, scale, 0.0, 0.0};
}

FittedDistribution FittedDistribution::logistic(double loc, double scale) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  return {DistributionFamily::kLogistic, loc, scale, 0.0, 0.0};
}

FittedDistribution FittedDistribution::gumbel(double loc, double scale) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  return {DistributionFamily::kGumbel, loc, scale, 0.0, 0.0};
}

FittedDistribution FittedDistribution::student_t(double loc, double scale, double df) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  require_positive(df, "df");
  return {DistributionFamily::kStudentT, loc, scale, df, 0.0};
}

FittedDistribution FittedDistribution::skew_normal(double loc, double scale, double shape) {
  require_finite(loc, "loc");
  require_positive(scale, "scale");
  require_finite(shape, "shape");
  return {DistributionFamily::kSkewNormal, loc, scale, shape, 0.0};
}

FittedDistribution FittedDistribution::log_normal(double mu_log, double sigma_log, double shift) {
  require_finite(mu_log, "mu_log");
  require_positive(sigma_log, "sigma_log");
  require_finite(shift, "shift");
  return {DistributionFamily::kLogNormal, mu_log, sigma_log, 0.0, shift};
}

FittedDistribution FittedDistribution::weibull(double shape, double scale, double shift) {
  require_positive(shape, "shape");
  require_positive(scale, "scale");
  require_finite(shift, "shift");
  return {DistributionFamily::kWeibull, shape, scale, 0.0, shift};
}

FittedDistribution FittedDistribution::kde(std::vector<double> centers, double bandwidth) {
  if (centers.empty()) throw InvalidInput("kde needs at least one center");
  for (double c : centers) require_finite(c, "kde center");
  require_positive(bandwidth, "bandwidth");
  FittedDistribution d(DistributionFamily::kKde, 0.0, bandwidth, 0.0, 0.0);
  d.centers_ = std::move(centers);
  return d;
}

double FittedDistribution::pdf(double y) const {
  if (std::isnan(y)) return 0.0;
  switch (family_) {
    case DistributionFamily::kNormal:
      return kInvSqrt2Pi / b_ * std::exp(-0.5 * ((y - a_) / b_) * ((y - a_) / b_));
    case DistributionFamily::kLaplace:
      return std::exp(-std::abs(y - a_) / b_) / (2.0 * b_);
    case DistributionFamily::kLogistic: {
      const double z = -std::abs(y - a_) / b_;
      const double e = std::exp(z);
      return e / (b_ * (1.0 + e) * (1.0 + e));
    }
    case DistributionFamily::kGumbel:
      if (!std::isfinite(y)) return 0.0;
      return bm::pdf(bm::extreme_value_distribution<double, Policy>(a_, b_), y);
    case DistributionFamily::kStudentT:
      if (!std::isfinite(y)) return 0.0;
      return bm::pdf(bm::students_t_distribution<double, Policy>(c_), (y - a_) / b_) / b_;
    case DistributionFamily::kSkewNormal:
      if (!std::isfinite(y)) return 0.0;
      return bm::pdf(bm::skew_normal_distribution<double, Policy>(a_, b_, c_), y);
    case DistributionFamily::kLogNormal:
      if (!(y > shift_) || !std::isfinite(y)) return 0.0;
      return bm::pdf(bm::lognormal_distribution<double, Policy>(a_, b_), y - shift_);
    case DistributionFamily::kWeibull:
      if (!(y >= shift_) || !std::isfinite(y)) return 0.0;
      if (y == shift_ && a_ < 1.0) return kInf;
      return bm::pdf(bm::weibull_distribution<double, Policy>(a_, b_), y - shift_);
    case DistributionFamily::kKde: {
      double s = 0.0;
      for (double c : centers_) {
        const double z = (y - c) / b_;
        s += std::exp(-0.5 * z * z);
      }
      return s * kInvSqrt2Pi / (b_ * static_cast<double>(centers_.size()));
    }
  }
  return 0.0;
}

double FittedDistribution::cdf(double y) const {
  if (std::isnan(y)) throw InvalidInput("cdf of NaN");
  if (y == kInf) return 1.0;
  if (y == -kInf) return 0.0;
  switch (family_) {
    case DistributionFamily::kNormal:
      return std_normal_cdf((y - a_) / b_);
    case DistributionFamily::kLaplace:
      return y < a_ ? 0.5 * std::exp((y - a_) / b_) : 1.0 - 0.5 * std::exp(-(y - a_) / b_);
    case DistributionFamily::kLogistic:
      return bm::cdf(bm::logistic_distribution<double, Policy>(a_, b_), y);
    case DistributionFamily::kGumbel:
      return bm::cdf(bm::extreme_value_distribution<double, Policy>(a_, b_), y);
    case DistributionFamily::kStudentT:
      return bm::cdf(bm::students_t_distribution<double, Policy>(c_), (y - a_) / b_);
    case DistributionFamily::kSkewNormal:
      return std::clamp(bm::cdf(bm::skew_normal_distribution<double, Policy>(a_, b_, c_), y), 0.0, 1.0);
    case DistributionFamily::kLogNormal:
      if (!(y > shift_)) return 0.0;
      return bm::cdf(bm::lognormal_distribution<double, Policy>(a_, b_), y - shift_);
    case DistributionFamily::kWeibull:
      if (!(y > shift_)) return 0.0;
      return bm::cdf(bm::weibull_distribution<double, Policy>(a_, b_), y - shift_);
    case DistributionFamily::kKde: {
      double s = 0.0;
      for (double c : centers_) s += std_normal_cdf((y - c) / b_);
      return std::min(1.0, s / static_cast<double>(centers_.size()));
    }
  }
  return 0.0;
}

std::pair<double, double> FittedDistribution::support() const {
  switch (family_) {
    case DistributionFamily::kLogNormal:
    case DistributionFamily::kWeibull:
      return {shift_, kInf};
    default:
      return {-kInf, kInf};
  }
}

double FittedDistribution::kde_quantile(double p) const {
  const auto [mn, mx] = std::minmax_element(centers_.begin(), centers_.end());
  double lo = *mn - 40.0 * b_;
  double hi = *mx + 40.0 * b_;
  for (int it = 0; it < 2000; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

double FittedDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
  const auto [lo, hi] = support();
  if (p == 0.0) return lo;
  if (p == 1.0) return hi;
  switch (family_) {
    case DistributionFamily::kNormal:
      return bm::quantile(bm::normal_distribution<double, Policy>(a_, b_), p);
    case DistributionFamily::kLaplace:
      return p < 0.5 ? a_ + b_ * std::log(2.0 * p) : a_ - b_ * std::log(2.0 * (1.0 - p));
    case DistributionFamily::kLogistic:
      return bm::quantile(bm::logistic_distribution<double, Policy>(a_, b_), p);
    case DistributionFamily::kGumbel:
      return bm::quantile(bm::extreme_value_distribution<double, Policy>(a_, b_), p);
    case DistributionFamily::kStudentT:
      return a_ + b_ * bm::quantile(bm::students_t_distribution<double, Policy>(c_), p);
    case DistributionFamily::kSkewNormal:
      return bm::quantile(bm::skew_normal_distribution<double, Policy>(a_, b_, c_), p);
    case DistributionFamily::kLogNormal:
      return shift_ + bm::quantile(bm::lognormal_distribution<double, Policy>(a_, b_), p);
    case DistributionFamily::kWeibull:
      return shift_ + bm::quantile(bm::weibull_distribution<double, Policy>(a_, b_), p);
    case DistributionFamily::kKde:
      return kde_quantile(p);
  }
  return 0.0;
}

double FittedDistribution::mean() const {
  switch (family_) {
    case DistributionFamily::kNormal:
    case DistributionFamily::kLaplace:
    case DistributionFamily::kLogistic:
      return a_;
    case DistributionFamily::kStudentT:
      return c_ > 1.0 ? a_ : std::numeric_limits<double>::quiet_NaN();
    case DistributionFamily::kGumbel:
      return bm::mean(bm::extreme_value_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kSkewNormal:
      return bm::mean(bm::skew_normal_distribution<double, Policy>(a_, b_, c_));
    case DistributionFamily::kLogNormal:
      return shift_ + bm::mean(bm::lognormal_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kWeibull:
      return shift_ + bm::mean(bm::weibull_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kKde:
      return std::accumulate(centers_.begin(), centers_.end(), 0.0) / static_cast<double>(centers_.size());
  }
  return 0.0;
}

double FittedDistribution::variance() const {
  switch (family_) {
    case DistributionFamily::kNormal:
      return b_ * b_;
    case DistributionFamily::kLaplace:
      return 2.0 * b_ * b_;
    case DistributionFamily::kLogistic:
      return bm::variance(bm::logistic_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kGumbel:
      return bm::variance(bm::extreme_value_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kStudentT:
      return c_ > 2.0 ? b_ * b_ * c_ / (c_ - 2.0) : kInf;
    case DistributionFamily::kSkewNormal:
      return bm::variance(bm::skew_normal_distribution<double, Policy>(a_, b_, c_));
    case DistributionFamily::kLogNormal:
      return bm::variance(bm::lognormal_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kWeibull:
      return bm::variance(bm::weibull_distribution<double, Policy>(a_, b_));
    case DistributionFamily::kKde: {
      const double m = mean();
      double ss = 0.0;
      for (double c : centers_) ss += (c - m) * (c - m);
      return b_ * b_ + ss / static_cast<double>(centers_.size());
    }
  }
  return 0.0;
}

double FittedDistribution::stddev() const { return std::sqrt(variance()); }

std::vector<std::pair<std::string, double>> FittedDistribution::params() const {
  switch (family_) {
    case DistributionFamily::kNormal:
    case DistributionFamily::kLaplace:
    case DistributionFamily::kLogistic:
    case DistributionFamily::kGumbel:
      return {{"loc", a_}, {"scale", b_}};
    case DistributionFamily::kStudentT:
      return {{"loc", a_}, {"scale", b_}, {"df", c_}};
    case DistributionFamily::kSkewNormal:
      return {{"loc", a_}, {"scale", b_}, {"shape", c_}};
    case DistributionFamily::kLogNormal:
      return {{"mu_log", a_}, {"sigma_log", b_}, {"shift", shift_}};
    case DistributionFamily::kWeibull:
      return {{"shape", a_}, {"scale", b_}, {"shift", shift_}};
    case DistributionFamily::kKde:
      return {{"bandwidth", b_}, {"n_kernels", static_cast<double>(centers_.size())}, {"mean", mean()}};
  }
  return {};
}

}  // namespace ibug
