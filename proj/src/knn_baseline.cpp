#include "ibug/knn_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ibug/error.hpp"
#include "ibug/metrics.hpp"
#include "ibug/parallel.hpp"
#include "ibug/tuning.hpp"

namespace ibug {

KnnModel::KnnModel(const Dataset& reference, std::vector<std::size_t> feature_order, std::size_t n_top)
    : targets_(reference.targets()) {
  if (n_top < 1) throw InvalidInput("n_top_features must be at least 1");
  columns_.assign(feature_order.begin(),
                  feature_order.begin() + static_cast<std::ptrdiff_t>(std::min(n_top, feature_order.size())));
  const std::size_t n = reference.n_rows();
  const std::size_t d = columns_.size();
  mean_.assign(d, 0.0);
  scale_.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = reference.at(i, columns_[c]);
      if (!is_missing(v)) {
        sum += v;
        count += 1.0;
      }
    }
    mean_[c] = count > 0.0 ? sum / count : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = reference.at(i, columns_[c]);
      if (!is_missing(v)) ss += (v - mean_[c]) * (v - mean_[c]);
    }
    const double sd = count > 1.0 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    scale_[c] = sd > 0.0 ? sd : 1.0;
  }
  points_.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double v = reference.at(i, columns_[c]);
      points_[i * d + c] = is_missing(v) ? 0.0 : (v - mean_[c]) / scale_[c];
    }
  }
}

std::vector<std::uint32_t> KnnModel::neighbor_order(std::span<const double> x) const {
  const std::size_t d = columns_.size();
  std::vector<double> q(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double v = x[columns_[c]];
    q[c] = is_missing(v) ? 0.0 : (v - mean_[c]) / scale_[c];
  }
  const std::size_t n = targets_.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = points_[i * d + c] - q[c];
      s += diff * diff;
    }
    dist[i] = s;
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  return order;
}

namespace {

double prefix_mean(const std::vector<std::uint32_t>& order, const std::vector<double>& y, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += y[order[i]];
  return s / static_cast<double>(k);
}

double prefix_variance(const std::vector<std::uint32_t>& order, const std::vector<double>& y, std::size_t k) {
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = y[order[i]];
  return sample_variance(v);
}

std::vector<std::size_t> clip_grid(const std::vector<std::size_t>& grid, std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t k : grid) {
    if (k >= lo && k <= hi) out.push_back(k);
  }
  return out;
}

}  // namespace

KnnTuneResult tune_knn(const Dataset& train, const Dataset& val, const KnnGrid& grid,
                       const TrainConfig& importance_model) {
  if (val.empty()) throw InvalidInput("validation set is empty");
  const std::size_t n = train.n_rows();
  const auto k_grid = grid.k_grid.empty() ? default_k_grid(n) : grid.k_grid;
  for (std::size_t k : k_grid) {
    if (k > n) throw InvalidInput("k " + std::to_string(k) + " exceeds the training set size");
  }
  const auto mean_grid = clip_grid(k_grid, 1, n);
  const auto var_grid = clip_grid(k_grid, 2, n);
  if (mean_grid.empty() || var_grid.empty()) throw InvalidInput("kNN k grid has no usable values");
  std::vector<std::size_t> top_grid;
  for (std::size_t t : grid.top_feature_grid) {
    const std::size_t c = std::min(t, train.n_features());
    if (std::find(top_grid.begin(), top_grid.end(), c) == top_grid.end()) top_grid.push_back(c);
  }
  const auto ranking = top_features(ibug::train(train, importance_model), train.n_features());

  const std::size_t m = val.n_rows();
  KnnTuneResult best;
  best.val_nll = std::numeric_limits<double>::infinity();
  for (std::size_t top : top_grid) {
    const KnnModel knn(train, ranking, top);
    std::vector<std::vector<double>> means(m, std::vector<double>(mean_grid.size()));
    std::vector<std::vector<double>> vars(m, std::vector<double>(var_grid.size()));
    parallel_for(m, [&](std::size_t j) {
      const auto order = knn.neighbor_order(val.row(j));
      for (std::size_t a = 0; a < mean_grid.size(); ++a) means[j][a] = prefix_mean(order, knn.targets(), mean_grid[a]);
      for (std::size_t b = 0; b < var_grid.size(); ++b) vars[j][b] = prefix_variance(order, knn.targets(), var_grid[b]);
    });
    for (std::size_t a = 0; a < mean_grid.size(); ++a) {
      for (std::size_t b = 0; b < var_grid.size(); ++b) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double sigma2 = std::max(vars[j][b], kDefaultMinVariance);
          total += nll(FittedDistribution::normal(means[j][a], std::sqrt(sigma2)), val.targets()[j]);
        }
        const double mean_nll = total / static_cast<double>(m);
        if (mean_nll < best.val_nll) {
          best.val_nll = mean_nll;
          best.config.n_top_features = top;
          best.config.k_mean = mean_grid[a];
          best.config.k_var = var_grid[b];
          double rho = std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < m; ++j) {
            if (vars[j][b] > 0.0) rho = std::min(rho, vars[j][b]);
          }
          best.config.rho = std::isfinite(rho) ? rho : kDefaultMinVariance;
        }
      }
    }
  }
  return best;
}

std::vector<ProbabilisticPrediction> predict_knn(const Dataset& train, const Dataset& test,
                                                 const KnnBaselineConfig& cfg,
                                                 const TrainConfig& importance_model) {
  const std::size_t n = train.n_rows();
  if (cfg.k_mean < 1 || cfg.k_mean > n || cfg.k_var < 2 || cfg.k_var > n)
    throw InvalidInput("kNN k values must lie within the training set size");
  if (test.n_features() != train.n_features()) throw InvalidInput("test feature count does not match train");
  const auto ranking = top_features(ibug::train(train, importance_model), train.n_features());
  const KnnModel knn(train, ranking, cfg.n_top_features);
  std::vector<ProbabilisticPrediction> out(test.n_rows());
  parallel_for(test.n_rows(), [&](std::size_t j) {
    const auto order = knn.neighbor_order(test.row(j));
    ProbabilisticPrediction p;
    p.mu = prefix_mean(order, knn.targets(), cfg.k_mean);
    p.sigma2 = std::max(prefix_variance(order, knn.targets(), cfg.k_var), cfg.rho);
    p.dist = FittedDistribution::normal(p.mu, std::sqrt(p.sigma2));
    out[j] = std::move(p);
  });
  return out;
}

std::vector<ProbabilisticPrediction> knn_baseline(const Dataset& train, const Dataset& val,
                                                  const Dataset& test, const KnnGrid& grid,
                                                  const TrainConfig& importance_model) {
  const KnnTuneResult tuned = tune_knn(train, val, grid, importance_model);
  return predict_knn(train, test, tuned.config, importance_model);
}

}  // namespace ibug
