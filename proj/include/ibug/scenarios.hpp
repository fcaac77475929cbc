#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ibug/dataset.hpp"
#include "ibug/trainer.hpp"

namespace ibug {

/// A packaged synthetic problem: a data generator with a known noise process
/// and the base-model settings used with it.
struct Scenario {
  std::string name;
  std::string description;
  std::size_t default_n = 0;
  TrainConfig train_config;
  std::function<Dataset(std::size_t n, std::uint64_t seed)> generate;
  /// Standard deviation of the noise at x.
  std::function<double(std::span<const double> x)> noise_sd;
};

/// friedman-hetero: Friedman #1 signal on U[0,1]^10 with noise sd 0.5 + |x0|.
/// dense-leaf: the same data with depth-2 trees and T = 500.
/// gaussian: linear signal plus N(0, 1) noise.
/// student-t3: linear signal plus t(3) noise.
const std::vector<Scenario>& packaged_scenarios();
const Scenario& find_scenario(const std::string& name);

}  // namespace ibug
