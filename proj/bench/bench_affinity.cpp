// Serial vs OpenMP affinity kernels on the dense-leaf scenario.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "ibug/affinity.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/parallel.hpp"
#include "ibug/scenarios.hpp"
#include "ibug/trainer.hpp"

int main(int argc, char** argv) {
  using namespace ibug;
  using Clock = std::chrono::steady_clock;
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 10000;
  const std::size_t n_probes = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 500;
  apply_thread_env();
  const Scenario& sc = find_scenario("dense-leaf");
  const Dataset train_data = sc.generate(n, 1);
  const Dataset probes = sc.generate(n_probes, 2);
  const Ensemble model = train(train_data, sc.train_config);
  const LeafIndex index = build_index(model, train_data);
  const auto trees = all_trees(model.n_trees());

  std::uint64_t check_serial = 0;
  auto start = Clock::now();
  for (std::size_t i = 0; i < probes.n_rows(); ++i) {
    check_serial += compute_affinities(probes.row(i), model, index, trees).counts[0];
  }
  const double serial = std::chrono::duration<double>(Clock::now() - start).count();

  start = Clock::now();
  const auto batch = compute_affinities_batch(probes, model, index, trees);
  const double parallel = std::chrono::duration<double>(Clock::now() - start).count();
  std::uint64_t check_parallel = 0;
  for (const auto& a : batch) check_parallel += a.counts[0];

  std::printf("n_train=%zu probes=%zu trees=%zu threads=%d\n", n, n_probes, model.n_trees(), max_threads());
  std::printf("serial   %.4f s  (%.1f us/probe)\n", serial, 1e6 * serial / n_probes);
  std::printf("parallel %.4f s  (%.1f us/probe)  speedup %.2fx\n", parallel, 1e6 * parallel / n_probes,
              serial / parallel);
  std::printf("results %s\n", check_serial == check_parallel ? "match" : "DIFFER");
  return check_serial == check_parallel ? 0 : 1;
}
