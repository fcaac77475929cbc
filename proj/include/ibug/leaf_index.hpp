#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ibug/dataset.hpp"
#include "ibug/ensemble.hpp"

namespace ibug {

/// Inverted index (tree, leaf) -> sorted training-instance ids, stored per
/// tree in compressed form: ids of leaf j are ids[offsets[j], offsets[j+1]).
class LeafIndex {
 public:
  struct TreeLists {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> ids;
  };

  LeafIndex() = default;
  LeafIndex(std::vector<TreeLists> trees, std::vector<double> targets);

  std::size_t n_train() const { return targets_.size(); }
  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_leaves(std::size_t t) const { return trees_[t].offsets.size() - 1; }
  const std::vector<double>& targets() const { return targets_; }

  std::span<const std::uint32_t> lookup(std::size_t t, std::int32_t leaf) const {
    const TreeLists& tl = trees_[t];
    return {tl.ids.data() + tl.offsets[leaf], tl.offsets[leaf + 1] - tl.offsets[leaf]};
  }

  const std::vector<TreeLists>& tree_lists() const { return trees_; }

 private:
  std::vector<TreeLists> trees_;
  std::vector<double> targets_;
};

/// Routes every training row through every tree. Throws InvalidInput when the
/// dataset does not match the model's feature count.
LeafIndex build_index(const Ensemble& model, const Dataset& train);

/// Per tree, the mean over probes of |leaf instance set| / n_train.
std::vector<double> leaf_density(const LeafIndex& index, const Ensemble& model,
                                 const Dataset& probes);

/// Content hashes keying an index cache file.
struct IndexCacheKey {
  std::uint64_t model_hash = 0;
  std::uint64_t data_hash = 0;
};

std::uint64_t model_hash(const Ensemble& model);
std::uint64_t dataset_hash(const Dataset& data);
IndexCacheKey index_cache_key(const Ensemble& model, const Dataset& train);

void save_index(const LeafIndex& index, const IndexCacheKey& key, const std::string& path);

/// Loads a cache written for `model`. The dataset hash is checked only when
/// `data_hash` is non-zero. Throws InvalidInput on any mismatch.
LeafIndex load_index(const std::string& path, const Ensemble& model, std::uint64_t data_hash = 0);

}  // namespace ibug
