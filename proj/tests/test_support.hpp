#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ibug/affinity.hpp"
#include "ibug/dataset.hpp"
#include "ibug/ensemble.hpp"
#include "ibug/trainer.hpp"

namespace ibug::testing {

inline Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed, double missing_rate = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> x(n * p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double signal = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double v = u(rng);
      // coarse values so ties and duplicates occur
      if (j % 3 == 2) v = std::round(v * 4.0) / 4.0;
      x[i * p + j] = v;
      signal += (j % 2 == 0 ? 1.0 : -0.5) * v * v + 0.3 * v;
    }
    y[i] = signal + noise(rng) * (1.0 + std::abs(x[i * p]));
    for (std::size_t j = 0; j < p; ++j) {
      if (missing_rate > 0.0 && std::uniform_real_distribution<double>(0, 1)(rng) < missing_rate)
        x[i * p + j] = kMissing;
    }
  }
  return Dataset(n, p, std::move(x), std::move(y));
}

inline Ensemble random_model(const Dataset& data, std::uint64_t seed, int n_trees) {
  std::mt19937_64 rng(seed);
  TrainConfig cfg;
  cfg.n_trees = n_trees;
  cfg.max_depth = 1 + static_cast<int>(rng() % 5);
  cfg.min_leaf_size = 1 + static_cast<int>(rng() % 8);
  cfg.learning_rate = 0.05 + 0.25 * std::uniform_real_distribution<double>(0, 1)(rng);
  cfg.lambda = static_cast<double>(rng() % 3);
  cfg.subsample_fraction = (rng() % 2 == 0) ? 1.0 : 0.7;
  cfg.seed = seed;
  return train(data, cfg);
}

/// Affinity by definition: for each training row, count trees where it shares the
/// probe's leaf, by routing both through each tree.
inline std::vector<std::uint32_t> brute_force_affinity(std::span<const double> x, const Ensemble& model,
                                                       const Dataset& train_data,
                                                       std::span<const std::size_t> trees) {
  std::vector<std::uint32_t> counts(train_data.n_rows(), 0);
  for (std::size_t i = 0; i < train_data.n_rows(); ++i) {
    for (std::size_t t : trees) {
      if (model.tree(t).leaf_index(x) == model.tree(t).leaf_index(train_data.row(i))) ++counts[i];
    }
  }
  return counts;
}

/// Manual traversal of the pre-order node array, independent of Tree::leaf_index.
inline double manual_predict(const Ensemble& model, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& tree : model.trees()) {
    const auto& nodes = tree.nodes();
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const double v = x[static_cast<std::size_t>(nodes[i].feature)];
      bool left;
      if (std::isnan(v)) {
        left = nodes[i].missing_goes_left;
      } else {
        left = !(v > nodes[i].threshold);
      }
      i = static_cast<std::size_t>(left ? nodes[i].left : nodes[i].right);
    }
    sum += nodes[i].value;
  }
  return model.base_score() + model.learning_rate() * sum;
}

inline std::string fixture_path(const std::string& rel) { return std::string(IBUG_FIXTURE_DIR) + "/" + rel; }

}  // namespace ibug::testing

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ibug/distribution.hpp"
#include "ibug/posterior.hpp"

namespace ibug::testing {

/// Integral of the pdf between the 1e-10 and 1 - 1e-10 quantiles, split into
/// equal-probability panels so narrow peaks are never stepped over. The exact
/// value is 1 - 2e-10.
inline double pdf_mass(const FittedDistribution& dist) {
  constexpr int kPanels = 200;
  const double lo_p = 1e-10;
  const double hi_p = 1.0 - 1e-10;
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  const double lower = dist.support().first;
  if (std::isfinite(lower)) {
    // Bounded below: integrate over u = log(y - lower) so densities that pile
    // up against the bound are resolved. Offsets below t0 are not resolvable
    // as y values, so that sliver is taken from the cdf.
    const double t0 = std::max(dist.quantile(lo_p) - lower, 1e-12 * std::max(1.0, std::abs(lower)));
    const double u0 = std::log(t0);
    const double u1 = std::log(dist.quantile(hi_p) - lower);
    const auto integrand = [&](double u) {
      const double t = std::exp(u);
      return dist.pdf(lower + t) * t;
    };
    for (int i = 0; i < kPanels; ++i) {
      const double a = u0 + (u1 - u0) * i / kPanels;
      const double b = u0 + (u1 - u0) * (i + 1) / kPanels;
      total += Rule::integrate(integrand, a, b, 10, 1e-13);
    }
    return total + dist.cdf(lower + t0) + lo_p;
  }
  double a = dist.quantile(lo_p);
  for (int i = 1; i <= kPanels; ++i) {
    const double b = dist.quantile(lo_p + (hi_p - lo_p) * i / kPanels);
    if (b > a) total += Rule::integrate([&](double y) { return dist.pdf(y); }, a, b, 10, 1e-13);
    a = b;
  }
  return total + 2 * lo_p;
}

/// Largest |quantile(cdf(y)) - y| / max(1, |y|) over interior points.
inline double worst_inversion(const FittedDistribution& dist) {
  double worst = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double y = dist.quantile(i / 100.0);
    const double back = dist.quantile(dist.cdf(y));
    worst = std::max(worst, std::abs(back - y) / std::max(1.0, std::abs(y)));
  }
  return worst;
}

/// One fitted member of every family, from a right-skewed neighbor sample.
inline std::vector<FittedDistribution> sample_fits() {
  std::mt19937_64 rng(2024);
  std::gamma_distribution<double> g(2.0, 1.5);
  NeighborSet nb;
  for (std::uint32_t i = 0; i < 40; ++i) {
    nb.ids.push_back(i);
    nb.targets.push_back(g(rng) - 1.0);
  }
  double mean = 0.0;
  for (double v : nb.targets) mean += v / 40.0;
  const double var = sample_variance(nb.targets);
  std::vector<FittedDistribution> out;
  for (auto f : all_families()) out.push_back(fit_distribution(f, nb, mean + 0.1, var * 1.2));
  return out;
}

}  // namespace ibug::testing
