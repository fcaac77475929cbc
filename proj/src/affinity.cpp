#include "ibug/affinity.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "ibug/error.hpp"
#include "ibug/parallel.hpp"

namespace ibug {

TreeSampling parse_tree_sampling(std::string_view tag) {
  if (tag == "all") return TreeSampling::kAll;
  if (tag == "uniform-random" || tag == "random") return TreeSampling::kUniformRandom;
  if (tag == "first-to-last" || tag == "first") return TreeSampling::kFirstToLast;
  if (tag == "last-to-first" || tag == "last") return TreeSampling::kLastToFirst;
  throw InvalidInput("unknown tree sampling strategy '" + std::string(tag) + "'");
}

std::string_view to_string(TreeSampling s) {
  switch (s) {
    case TreeSampling::kAll: return "all";
    case TreeSampling::kUniformRandom: return "uniform-random";
    case TreeSampling::kFirstToLast: return "first-to-last";
    case TreeSampling::kLastToFirst: return "last-to-first";
  }
  return "unknown";
}

std::vector<std::size_t> all_trees(std::size_t n_trees) {
  std::vector<std::size_t> out(n_trees);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::vector<std::size_t> select_trees(std::size_t n_trees, const TreeSubset& subset) {
  if (subset.strategy == TreeSampling::kAll) return all_trees(n_trees);
  const std::size_t tau = subset.tau;
  if (tau < 1 || tau > n_trees)
    throw InvalidInput("tau must lie in [1, " + std::to_string(n_trees) + "], got " +
                       std::to_string(tau));
  std::vector<std::size_t> out;
  switch (subset.strategy) {
    case TreeSampling::kFirstToLast:
      out = all_trees(tau);
      break;
    case TreeSampling::kLastToFirst:
      out.resize(tau);
      std::iota(out.begin(), out.end(), n_trees - tau);
      break;
    case TreeSampling::kUniformRandom: {
      // Partial Fisher-Yates: sampling without replacement.
      std::vector<std::size_t> pool = all_trees(n_trees);
      std::mt19937_64 rng(subset.seed);
      for (std::size_t i = 0; i < tau; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n_trees - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(tau));
      std::sort(out.begin(), out.end());
      break;
    }
    case TreeSampling::kAll:
      break;
  }
  return out;
}

AffinityVector compute_affinities(std::span<const double> x, const Ensemble& model,
                                  const LeafIndex& index, std::span<const std::size_t> trees) {
  model.check_row(x);
  if (index.n_trees() != model.n_trees()) throw InvalidInput("index was not built for this model");
  AffinityVector out;
  out.counts.assign(index.n_train(), 0);
  out.n_trees_used = trees.size();
  std::uint32_t* counts = out.counts.data();
  for (std::size_t t : trees) {
    if (t >= model.n_trees()) throw InvalidInput("tree index out of range");
    for (std::uint32_t i : index.lookup(t, model.tree(t).leaf_id(x))) ++counts[i];
  }
  return out;
}

std::vector<AffinityVector> compute_affinities_batch(const Dataset& probes, const Ensemble& model,
                                                     const LeafIndex& index,
                                                     std::span<const std::size_t> trees) {
  if (probes.n_features() != model.n_features())
    throw InvalidInput("probe feature count does not match the model");
  std::vector<AffinityVector> out(probes.n_rows());
  parallel_for(probes.n_rows(), [&](std::size_t i) {
    out[i] = compute_affinities(probes.row(i), model, index, trees);
  });
  return out;
}

namespace {

struct ByAffinity {
  const std::uint32_t* counts;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
  }
};

}  // namespace

NeighborSet take_first(std::span<const std::uint32_t> order, std::size_t k,
                       std::span<const double> targets) {
  if (k < 1 || k > order.size()) throw InvalidInput("k must lie in [1, n_train]");
  NeighborSet out;
  out.ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  out.targets.reserve(k);
  for (std::uint32_t id : out.ids) out.targets.push_back(targets[id]);
  return out;
}

NeighborSet top_k(const AffinityVector& aff, std::size_t k, std::span<const double> targets) {
  const std::size_t n = aff.counts.size();
  if (k < 1 || k > n)
    throw InvalidInput("k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  if (targets.size() != n) throw InvalidInput("target count does not match the affinity vector");
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  const ByAffinity cmp{aff.counts.data()};
  if (k < n) std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k - 1), ids.end(), cmp);
  std::sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), cmp);
  return take_first(ids, k, targets);
}

std::vector<std::uint32_t> affinity_order(const AffinityVector& aff) {
  std::vector<std::uint32_t> ids(aff.counts.size());
  std::iota(ids.begin(), ids.end(), 0u);
  std::sort(ids.begin(), ids.end(), ByAffinity{aff.counts.data()});
  return ids;
}

}  // namespace ibug
