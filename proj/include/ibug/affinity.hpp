#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ibug/dataset.hpp"
#include "ibug/ensemble.hpp"
#include "ibug/leaf_index.hpp"

namespace ibug {

enum class TreeSampling { kAll, kUniformRandom, kFirstToLast, kLastToFirst };

/// Accepts the long names ("all", "uniform-random", "first-to-last",
/// "last-to-first") and the CLI short forms ("random", "first", "last").
TreeSampling parse_tree_sampling(std::string_view tag);
std::string_view to_string(TreeSampling s);

struct TreeSubset {
  TreeSampling strategy = TreeSampling::kAll;
  std::size_t tau = 0;     // ignored by kAll
  std::uint64_t seed = 0;  // used only by kUniformRandom
};

/// Sorted, distinct tree indices in [0, n_trees).
std::vector<std::size_t> select_trees(std::size_t n_trees, const TreeSubset& subset);

std::vector<std::size_t> all_trees(std::size_t n_trees);

/// counts[i] = number of selected trees in which training instance i shares
/// the leaf of the target instance.
struct AffinityVector {
  std::vector<std::uint32_t> counts;
  std::size_t n_trees_used = 0;
};

struct NeighborSet {
  std::vector<std::uint32_t> ids;
  std::vector<double> targets;

  std::size_t k() const { return ids.size(); }
};

/// Serial affinity computation for one target instance.
AffinityVector compute_affinities(std::span<const double> x, const Ensemble& model,
                                  const LeafIndex& index, std::span<const std::size_t> trees);

/// Same as calling compute_affinities on every probe row; parallel over probes.
std::vector<AffinityVector> compute_affinities_batch(const Dataset& probes, const Ensemble& model,
                                                     const LeafIndex& index,
                                                     std::span<const std::size_t> trees);

/// The k instances with the largest counts, ordered by (count desc, id asc).
NeighborSet top_k(const AffinityVector& aff, std::size_t k, std::span<const double> targets);

/// Every training id in (count desc, id asc) order.
std::vector<std::uint32_t> affinity_order(const AffinityVector& aff);

/// First k entries of an affinity_order() result as a NeighborSet.
NeighborSet take_first(std::span<const std::uint32_t> order, std::size_t k,
                       std::span<const double> targets);

}  // namespace ibug
