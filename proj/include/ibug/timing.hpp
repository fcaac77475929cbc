#pragma once

#include <string>
#include <vector>

#include "ibug/affinity.hpp"
#include "ibug/dataset.hpp"
#include "ibug/ensemble.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/posterior.hpp"

namespace ibug {

struct TimingRow {
  std::size_t tau = 0;
  double mean_affinity_seconds = 0.0;  // per probe
  double mean_predict_seconds = 0.0;   // per probe, full pipeline
  double mean_nll = 0.0;
};

struct TimingOptions {
  TreeSampling strategy = TreeSampling::kFirstToLast;
  std::uint64_t seed = 0;
  std::size_t repeats = 3;  // the fastest repeat is reported
};

/// Runs single-threaded. Each tau must lie in [1, n_trees]. `probes` needs
/// targets for the NLL column.
std::vector<TimingRow> benchmark_timing(const Ensemble& model, const LeafIndex& index,
                                        const Dataset& probes, const std::vector<std::size_t>& tau_grid,
                                        const PosteriorConfig& cfg, const TimingOptions& options = {});

std::string timing_csv(const std::vector<TimingRow>& rows);

}  // namespace ibug
