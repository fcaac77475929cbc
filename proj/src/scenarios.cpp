#include "ibug/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ibug/error.hpp"

namespace ibug {

namespace {

constexpr std::size_t kFriedmanFeatures = 10;
constexpr std::size_t kLinearFeatures = 5;

double friedman_signal(std::span<const double> x) {
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

double hetero_sd(std::span<const double> x) { return 0.5 + std::abs(x[0]); }

double linear_signal(std::span<const double> x) {
  return 3.0 * x[0] - 2.0 * x[1] + 1.5 * x[2] + 4.0 * x[3] * x[4];
}

Dataset uniform_design(std::size_t n, std::size_t p, std::uint64_t seed,
                       const std::function<double(std::span<const double>, std::mt19937_64&)>& response) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> x(n * p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x[i * p + j] = unif(rng);
    y[i] = response(std::span<const double>(x.data() + i * p, p), rng);
  }
  return Dataset(n, p, std::move(x), std::move(y));
}

Dataset friedman_hetero(std::size_t n, std::uint64_t seed) {
  return uniform_design(n, kFriedmanFeatures, seed, [](std::span<const double> x, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    return friedman_signal(x) + hetero_sd(x) * noise(rng);
  });
}

std::vector<Scenario> make_scenarios() {
  std::vector<Scenario> s;

  TrainConfig hetero_cfg;
  hetero_cfg.n_trees = 200;
  hetero_cfg.learning_rate = 0.1;
  hetero_cfg.max_depth = 4;
  hetero_cfg.min_leaf_size = 5;
  s.push_back({"friedman-hetero",
               "Friedman #1 signal, x ~ U[0,1]^10, noise sd 0.5 + |x0|",
               5000, hetero_cfg, friedman_hetero, hetero_sd});

  TrainConfig dense_cfg;
  dense_cfg.n_trees = 500;
  dense_cfg.learning_rate = 0.1;
  dense_cfg.max_depth = 2;
  dense_cfg.min_leaf_size = 1;
  s.push_back({"dense-leaf",
               "friedman-hetero data modelled with depth-2 trees (few, dense leaves)",
               10000, dense_cfg, friedman_hetero, hetero_sd});

  TrainConfig linear_cfg;
  linear_cfg.n_trees = 150;
  linear_cfg.learning_rate = 0.1;
  linear_cfg.max_depth = 3;
  linear_cfg.min_leaf_size = 5;
  s.push_back({"gaussian", "linear signal on U[0,1]^5 with N(0, 1) noise", 2000, linear_cfg,
               [](std::size_t n, std::uint64_t seed) {
                 return uniform_design(n, kLinearFeatures, seed,
                                       [](std::span<const double> x, std::mt19937_64& rng) {
                                         std::normal_distribution<double> noise(0.0, 1.0);
                                         return linear_signal(x) + noise(rng);
                                       });
               },
               [](std::span<const double>) { return 1.0; }});

  s.push_back({"student-t3", "linear signal on U[0,1]^5 with t(3) noise", 2000, linear_cfg,
               [](std::size_t n, std::uint64_t seed) {
                 return uniform_design(n, kLinearFeatures, seed,
                                       [](std::span<const double> x, std::mt19937_64& rng) {
                                         std::student_t_distribution<double> noise(3.0);
                                         return linear_signal(x) + noise(rng);
                                       });
               },
               [](std::span<const double>) { return std::sqrt(3.0); }});
  return s;
}

}  // namespace

const std::vector<Scenario>& packaged_scenarios() {
  static const std::vector<Scenario> kScenarios = make_scenarios();
  return kScenarios;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : packaged_scenarios()) {
    if (s.name == name) return s;
  }
  throw InvalidInput("unknown scenario '" + name + "'");
}

}  // namespace ibug
