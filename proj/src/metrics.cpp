#include "ibug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ibug/error.hpp"

namespace ibug {

Metric parse_metric(std::string_view tag) {
  if (tag == "nll") return Metric::kNll;
  if (tag == "crps") return Metric::kCrps;
  throw InvalidInput("unknown metric '" + std::string(tag) + "'");
}

std::string_view to_string(Metric metric) { return metric == Metric::kNll ? "nll" : "crps"; }

double nll(const FittedDistribution& dist, double y) {
  return -std::log(std::max(dist.pdf(y), 1e-300));
}

namespace {

double normal_crps(double mu, double sigma, double y) {
  const double z = (y - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

template <typename F>
double adaptive_trapezoid(const F& f, double a, double b, double fa, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double coarse = 0.5 * (b - a) * (fa + fb);
  const double fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
  if (std::abs(fine - coarse) <= 3.0 * tol) return fine;
  if (depth >= 60) throw NumericError("CRPS quadrature did not converge");
  return adaptive_trapezoid(f, a, m, fa, fm, 0.5 * tol, depth + 1) +
         adaptive_trapezoid(f, m, b, fm, fb, 0.5 * tol, depth + 1);
}

// Splits [a, b] into equal panels before adapting so a coincidentally
// symmetric integrand cannot pass the first error check.
template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  double x0 = a;
  double f0 = f(x0);
  for (int i = 1; i <= kPanels; ++i) {
    const double x1 = i == kPanels ? b : a + h * i;
    const double f1 = f(x1);
    total += adaptive_trapezoid(f, x0, x1, f0, f1, tol / kPanels, 0);
    x0 = x1;
    f0 = f1;
  }
  return total;
}

}  // namespace

double crps_quadrature(const FittedDistribution& dist, double y, double abs_tol) {
  if (!std::isfinite(y)) throw InvalidInput("CRPS outcome must be finite");
  const double lo = std::min(dist.quantile(1e-6), y);
  const double hi = std::max(dist.quantile(1.0 - 1e-6), y);
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericError("CRPS integration range is not finite");
  const double width = hi - lo;
  const auto below = [&](double t) {
    const double c = dist.cdf(t);
    return c * c;
  };
  const auto above = [&](double t) {
    const double c = 1.0 - dist.cdf(t);
    return c * c;
  };
  const double w_lo = width > 0.0 ? (y - lo) / width : 0.5;
  const double w_hi = 1.0 - w_lo;
  return integrate(below, lo, y, abs_tol * std::max(w_lo, 1e-3)) +
         integrate(above, y, hi, abs_tol * std::max(w_hi, 1e-3));
}

double crps(const FittedDistribution& dist, double y) {
  if (dist.family() == DistributionFamily::kNormal) {
    const auto p = dist.params();
    return normal_crps(p[0].second, p[1].second, y);
  }
  return crps_quadrature(dist, y);
}

double score(Metric metric, const FittedDistribution& dist, double y) {
  return metric == Metric::kNll ? nll(dist, y) : crps(dist, y);
}

std::vector<double> default_quantile_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 19; ++i) levels.push_back(0.05 * i);
  return levels;
}

double check_score(const FittedDistribution& dist, double y, std::span<const double> levels) {
  if (levels.empty()) throw InvalidInput("check score needs at least one level");
  double total = 0.0;
  for (double q : levels) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("quantile levels must lie in (0, 1)");
    const double yq = dist.quantile(q);
    total += ((y < yq ? 1.0 : 0.0) - q) * (yq - y);
  }
  return total / static_cast<double>(levels.size());
}

double check_score(const FittedDistribution& dist, double y) {
  const auto levels = default_quantile_levels();
  return check_score(dist, y, levels);
}

double interval_score(const FittedDistribution& dist, double y, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  const double l = dist.quantile(alpha / 2.0);
  const double u = dist.quantile(1.0 - alpha / 2.0);
  return (u - l) + (2.0 / alpha) * std::max(0.0, l - y) + (2.0 / alpha) * std::max(0.0, y - u);
}

CalibrationDiagnostics calibration_diagnostics(std::span<const FittedDistribution> dists,
                                               std::span<const double> ys) {
  if (dists.size() != ys.size()) throw InvalidInput("distribution and outcome counts differ");
  if (dists.size() < 20) throw InvalidInput("calibration diagnostics need at least 20 instances");
  const double m = static_cast<double>(ys.size());
  CalibrationDiagnostics out;
  constexpr int kLevels = 19;
  for (int i = 1; i <= kLevels; ++i) {
    const double p = 0.05 * i;
    std::size_t inside = 0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double l = dists[j].quantile(0.5 - p / 2.0);
      const double u = dists[j].quantile(0.5 + p / 2.0);
      if (ys[j] >= l && ys[j] <= u) ++inside;
    }
    out.mace += std::abs(static_cast<double>(inside) / m - p);
  }
  out.mace /= kLevels;
  for (const auto& d : dists) out.sharpness += d.stddev();
  out.sharpness /= m;
  return out;
}

double rmse(std::span<const double> preds, std::span<const double> ys) {
  if (preds.size() != ys.size()) throw InvalidInput("prediction and outcome counts differ");
  if (preds.empty()) throw InvalidInput("rmse needs at least one value");
  double ss = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) ss += (ys[i] - preds[i]) * (ys[i] - preds[i]);
  return std::sqrt(ss / static_cast<double>(ys.size()));
}

ScoreSummary summarize(std::string metric, std::vector<double> scores) {
  ScoreSummary s;
  s.metric = std::move(metric);
  s.scores = std::move(scores);
  const double m = static_cast<double>(s.scores.size());
  if (s.scores.empty()) return s;
  for (double v : s.scores) s.mean += v;
  s.mean /= m;
  if (s.scores.size() > 1) {
    double ss = 0.0;
    for (double v : s.scores) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  return s;
}

}  // namespace ibug
