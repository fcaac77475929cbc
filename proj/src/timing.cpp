#include "ibug/timing.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>

#include "ibug/error.hpp"
#include "ibug/metrics.hpp"
#include "ibug/parallel.hpp"

namespace ibug {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::vector<TimingRow> benchmark_timing(const Ensemble& model, const LeafIndex& index,
                                        const Dataset& probes, const std::vector<std::size_t>& tau_grid,
                                        const PosteriorConfig& cfg, const TimingOptions& options) {
  cfg.validate();
  if (probes.n_rows() == 0) throw InvalidInput("timing needs at least one probe");
  if (options.repeats == 0) throw InvalidInput("repeats must be positive");
  ScopedThreads single(1);
  const double n = static_cast<double>(probes.n_rows());
  std::vector<TimingRow> rows;
  for (std::size_t tau : tau_grid) {
    if (tau < 1 || tau > model.n_trees()) throw InvalidInput("tau must lie in [1, n_trees]");
    const TreeSubset subset{options.strategy, tau, options.seed};
    const auto trees = select_trees(model.n_trees(), subset);
    TimingRow row;
    row.tau = tau;
    row.mean_affinity_seconds = std::numeric_limits<double>::infinity();
    row.mean_predict_seconds = std::numeric_limits<double>::infinity();
    volatile std::size_t sink = 0;
    for (std::size_t r = 0; r < options.repeats; ++r) {
      auto start = Clock::now();
      for (std::size_t i = 0; i < probes.n_rows(); ++i) {
        const AffinityVector aff = compute_affinities(probes.row(i), model, index, trees);
        sink = sink + aff.n_trees_used;
      }
      row.mean_affinity_seconds = std::min(row.mean_affinity_seconds, seconds_since(start) / n);

      double nll_sum = 0.0;
      start = Clock::now();
      for (std::size_t i = 0; i < probes.n_rows(); ++i) {
        const auto p = predict_probabilistic(probes.row(i), model, index, trees, cfg);
        nll_sum += nll(p.dist, probes.targets()[i]);
      }
      row.mean_predict_seconds = std::min(row.mean_predict_seconds, seconds_since(start) / n);
      row.mean_nll = nll_sum / n;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::string out = "tau,mean_affinity_seconds,mean_predict_seconds,mean_nll\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", r.tau, r.mean_affinity_seconds,
                  r.mean_predict_seconds, r.mean_nll);
    out += buf;
  }
  return out;
}

}  // namespace ibug
