#include "ibug/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <string>

#include "ibug/error.hpp"
#include "ibug/parallel.hpp"
#include "ibug/simplex.hpp"

namespace ibug {

void PosteriorConfig::validate() const {
  if (k < 2) throw InvalidInput("k must be at least 2");
  if (!(rho > 0.0)) throw InvalidInput("rho must be positive");
  if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
  if (!(delta >= 0.0)) throw InvalidInput("delta must be non-negative");
}

double sample_variance(std::span<const double> values) {
  const std::size_t k = values.size();
  if (k < 2) throw InvalidInput("variance needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(k - 1);
}

double raw_variance(const NeighborSet& neighbors, double rho) {
  if (neighbors.k() < 2) throw InvalidInput("raw variance needs k >= 2");
  return std::max(sample_variance(neighbors.targets), rho);
}

double calibrate_variance(double sigma2, double gamma, double delta) {
  const double out = gamma * sigma2 + delta;
  if (!(out > 0.0) || !std::isfinite(out))
    throw InvalidInput("calibrated variance must be positive and finite");
  return out;
}

namespace {

constexpr double kMinStudentDf = 2.01;
constexpr double kMaxStudentDf = 1e6;
constexpr double kMaxSkewShape = 50.0;

double percentile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;  // central moments, population normalization
  double m3 = 0.0;
  double m4 = 0.0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  for (double x : v) {
    const double d = x - m.mean;
    m.m2 += d * d;
    m.m3 += d * d * d;
    m.m4 += d * d * d * d;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

SimplexResult solve_or_throw(const std::function<double(const std::vector<double>&)>& nll,
                             std::vector<double> x0, const char* what) {
  SimplexOptions opts;
  opts.max_iterations = 500;
  opts.rel_tol = 1e-8;
  SimplexResult res = minimize_simplex(nll, std::move(x0), opts);
  if (!res.converged || !std::isfinite(res.value))
    throw FitError(std::string(what) + " maximum likelihood fit did not converge", res.x);
  return res;
}

FittedDistribution fit_student_t(std::span<const double> y, double mu, double sigma2) {
  const Moments m = moments(y);
  double df0 = 30.0;
  if (m.m2 > 0.0) {
    const double excess = m.m4 / (m.m2 * m.m2) - 3.0;
    if (excess > 0.05) df0 = 4.0 + 6.0 / excess;
  }
  df0 = std::clamp(df0, 2.5, 1e5);
  const auto df_of = [](double u) { return kMinStudentDf + std::exp(u); };
  const double u_max = std::log(kMaxStudentDf - kMinStudentDf);
  const auto nll = [&](const std::vector<double>& p) {
    const double u = p[0];
    if (u > u_max) return std::numeric_limits<double>::infinity();
    const double df = df_of(u);
    const double scale = std::sqrt(sigma2 * (df - 2.0) / df);
    const double norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                        0.5 * std::log(df * std::numbers::pi) - std::log(scale);
    double total = 0.0;
    for (double v : y) {
      const double z = (v - mu) / scale;
      total -= norm - 0.5 * (df + 1.0) * std::log1p(z * z / df);
    }
    return total;
  };
  const SimplexResult res = solve_or_throw(nll, {std::log(df0 - kMinStudentDf)}, "student-t");
  const double df = df_of(res.x[0]);
  return FittedDistribution::student_t(mu, std::sqrt(sigma2 * (df - 2.0) / df), df);
}

// Skew-normal with mean and variance pinned: shape alpha determines
// delta = alpha / sqrt(1 + alpha^2), scale and location follow.
struct SkewParams {
  double loc;
  double scale;
};

SkewParams skew_params(double alpha, double mu, double sigma2) {
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  const double b = delta * std::sqrt(2.0 / std::numbers::pi);
  const double scale = std::sqrt(sigma2 / (1.0 - b * b));
  return {mu - scale * b, scale};
}

FittedDistribution fit_skew_normal(std::span<const double> y, double mu, double sigma2) {
  const Moments m = moments(y);
  double alpha0 = 0.0;
  if (m.m2 > 0.0) {
    const double skew = std::clamp(m.m3 / std::pow(m.m2, 1.5), -0.99, 0.99);
    const double c = std::cbrt(2.0 * std::abs(skew) / (4.0 - std::numbers::pi));
    const double abs_delta = std::min(0.999, std::sqrt(std::numbers::pi / 2.0 * c * c / (1.0 + c * c)));
    alpha0 = std::copysign(abs_delta / std::sqrt(1.0 - abs_delta * abs_delta), skew);
  }
  alpha0 = std::clamp(alpha0, -0.9 * kMaxSkewShape, 0.9 * kMaxSkewShape);
  const auto nll = [&](const std::vector<double>& p) {
    const double alpha = p[0];
    if (std::abs(alpha) > kMaxSkewShape) return std::numeric_limits<double>::infinity();
    const SkewParams sp = skew_params(alpha, mu, sigma2);
    double total = 0.0;
    for (double v : y) {
      const double z = (v - sp.loc) / sp.scale;
      const double tail = 0.5 * std::erfc(-alpha * z / std::numbers::sqrt2);
      total -= std::log(2.0) - std::log(sp.scale) - 0.5 * std::log(2.0 * std::numbers::pi) -
               0.5 * z * z + std::log(tail);
    }
    return total;
  };
  const SimplexResult res = solve_or_throw(nll, {alpha0}, "skewnormal");
  const SkewParams sp = skew_params(res.x[0], mu, sigma2);
  return FittedDistribution::skew_normal(sp.loc, sp.scale, res.x[0]);
}

// Positive-support families fit on y - shift; shift is non-zero only when the
// data contains non-positive values.
double positive_shift(std::span<const double> y) {
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mn > 0.0) return 0.0;
  return *mn - 1e-6 * (*mx - *mn);
}

std::vector<double> shifted_positive(std::span<const double> y, double shift, const char* what) {
  std::vector<double> out;
  out.reserve(y.size());
  for (double v : y) {
    const double s = v - shift;
    if (!(s > 0.0)) throw FitError(std::string(what) + " needs positive data after shifting");
    out.push_back(s);
  }
  return out;
}

FittedDistribution fit_log_normal(std::span<const double> y) {
  const double shift = positive_shift(y);
  const auto x = shifted_positive(y, shift, "lognormal");
  double m = 0.0;
  for (double v : x) m += std::log(v);
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (std::log(v) - m) * (std::log(v) - m);
  const double s = std::sqrt(ss / static_cast<double>(x.size()));
  if (!(s > 0.0)) throw FitError("lognormal fit on constant data", {m, s});
  return FittedDistribution::log_normal(m, s, shift);
}

FittedDistribution fit_weibull(std::span<const double> y) {
  const double shift = positive_shift(y);
  const auto x = shifted_positive(y, shift, "weibull");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (*mn == *mx) throw FitError("weibull fit on constant data", {});
  const double n = static_cast<double>(x.size());
  std::vector<double> logs(x.size());
  double sum_log = 0.0;
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    logs[i] = std::log(x[i]);
    sum_log += logs[i];
    max_log = std::max(max_log, logs[i]);
  }
  // log of the profiled scale: (1/c) * log(mean(x^c)), computed stably.
  const auto log_scale = [&](double c) {
    double s = 0.0;
    for (double l : logs) s += std::exp(c * (l - max_log));
    return max_log + std::log(s / n) / c;
  };
  const auto nll = [&](const std::vector<double>& p) {
    const double c = std::exp(p[0]);
    if (c < 1e-3 || c > 1e3) return std::numeric_limits<double>::infinity();
    return -(n * std::log(c) - n * c * log_scale(c) + (c - 1.0) * sum_log - n);
  };
  const Moments m = moments(x);
  const double cv = std::sqrt(m.m2) / m.mean;
  const double c0 = std::clamp(std::pow(cv, -1.086), 0.1, 50.0);
  const SimplexResult res = solve_or_throw(nll, {std::log(c0)}, "weibull");
  const double c = std::exp(res.x[0]);
  return FittedDistribution::weibull(c, std::exp(log_scale(c)), shift);
}

}  // namespace

double silverman_bandwidth(std::span<const double> values, double fallback_sd) {
  const std::size_t k = values.size();
  if (k < 2) throw InvalidInput("bandwidth needs at least two values");
  const double sd = std::sqrt(sample_variance(values));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = percentile(sorted, 0.75) - percentile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = fallback_sd;
  if (!(spread > 0.0)) throw FitError("kde bandwidth is zero");
  return 0.9 * spread * std::pow(static_cast<double>(k), -0.2);
}

FittedDistribution fit_distribution(DistributionFamily family, const NeighborSet& neighbors,
                                    double mu, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("sigma2 must be positive");
  if (!std::isfinite(mu)) throw InvalidInput("mu must be finite");
  const std::span<const double> y(neighbors.targets);
  const double sd = std::sqrt(sigma2);
  switch (family) {
    case DistributionFamily::kNormal:
      return FittedDistribution::normal(mu, sd);
    case DistributionFamily::kLaplace:
      return FittedDistribution::laplace(mu, std::sqrt(sigma2 / 2.0));
    case DistributionFamily::kLogistic:
      return FittedDistribution::logistic(mu, std::sqrt(3.0 * sigma2) / std::numbers::pi);
    case DistributionFamily::kGumbel: {
      const double scale = std::sqrt(6.0 * sigma2) / std::numbers::pi;
      return FittedDistribution::gumbel(mu - std::numbers::egamma * scale, scale);
    }
    case DistributionFamily::kStudentT:
      if (y.empty()) throw FitError("student-t needs neighbor targets");
      return fit_student_t(y, mu, sigma2);
    case DistributionFamily::kSkewNormal:
      if (y.empty()) throw FitError("skewnormal needs neighbor targets");
      return fit_skew_normal(y, mu, sigma2);
    case DistributionFamily::kLogNormal:
      if (y.size() < 2) throw FitError("lognormal needs at least two neighbor targets");
      return fit_log_normal(y);
    case DistributionFamily::kWeibull:
      if (y.size() < 2) throw FitError("weibull needs at least two neighbor targets");
      return fit_weibull(y);
    case DistributionFamily::kKde: {
      if (y.size() < 2) throw FitError("kde needs at least two neighbor targets");
      const double h = silverman_bandwidth(y, sd);
      const double offset = mu - std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
      std::vector<double> centers;
      centers.reserve(y.size());
      for (double v : y) centers.push_back(v + offset);
      return FittedDistribution::kde(std::move(centers), h);
    }
  }
  throw InvalidInput("unknown distribution family");
}

ProbabilisticPrediction predict_probabilistic(std::span<const double> x, const Ensemble& model,
                                              const LeafIndex& index,
                                              std::span<const std::size_t> trees,
                                              const PosteriorConfig& cfg) {
  cfg.validate();
  ProbabilisticPrediction out;
  out.mu = model.predict(x);
  const AffinityVector aff = compute_affinities(x, model, index, trees);
  const NeighborSet nb = top_k(aff, cfg.k, index.targets());
  out.sigma2 = calibrate_variance(raw_variance(nb, cfg.rho), cfg.gamma, cfg.delta);
  out.dist = fit_distribution(cfg.family, nb, out.mu, out.sigma2);
  return out;
}

std::vector<ProbabilisticPrediction> predict_probabilistic_batch(
    const Dataset& probes, const Ensemble& model, const LeafIndex& index,
    std::span<const std::size_t> trees, const PosteriorConfig& cfg) {
  cfg.validate();
  if (probes.n_features() != model.n_features())
    throw InvalidInput("probe feature count does not match the model");
  std::vector<ProbabilisticPrediction> out(probes.n_rows());
  parallel_for(probes.n_rows(), [&](std::size_t i) {
    out[i] = predict_probabilistic(probes.row(i), model, index, trees, cfg);
  });
  return out;
}

}  // namespace ibug
