#include "ibug/leaf_index.hpp"

#include <cstring>
#include <fstream>

#include "ibug/error.hpp"
#include "ibug/parallel.hpp"
#include <limits>
#include "ibug/model_io.hpp"

namespace ibug {

LeafIndex::LeafIndex(std::vector<TreeLists> trees, std::vector<double> targets)
    : trees_(std::move(trees)), targets_(std::move(targets)) {
  for (const TreeLists& tl : trees_) {
    if (tl.offsets.empty() || tl.offsets.back() != tl.ids.size() ||
        tl.ids.size() != targets_.size())
      throw InvalidInput("leaf lists do not partition the training set");
  }
}

LeafIndex build_index(const Ensemble& model, const Dataset& train) {
  if (train.n_features() != model.n_features())
    throw InvalidInput("dataset has " + std::to_string(train.n_features()) +
                       " features, model expects " + std::to_string(model.n_features()));
  const std::size_t n = train.n_rows();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("dataset too large to index");
  std::vector<LeafIndex::TreeLists> lists(model.n_trees());
  parallel_for(model.n_trees(), [&](std::size_t t) {
    const Tree& tree = model.tree(t);
    std::vector<std::int32_t> leaf(n);
    std::vector<std::uint32_t> counts(tree.n_leaves() + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      leaf[i] = tree.leaf_id(train.row(i));
      ++counts[leaf[i] + 1];
    }
    auto& tl = lists[t];
    tl.offsets.assign(tree.n_leaves() + 1, 0);
    for (std::size_t j = 0; j < tree.n_leaves(); ++j) tl.offsets[j + 1] = tl.offsets[j] + counts[j + 1];
    tl.ids.resize(n);
    std::vector<std::uint32_t> cursor(tl.offsets.begin(), tl.offsets.end() - 1);
    // Ascending scan keeps each leaf list sorted.
    for (std::size_t i = 0; i < n; ++i) tl.ids[cursor[leaf[i]]++] = static_cast<std::uint32_t>(i);
  });
  return LeafIndex(std::move(lists), train.targets());
}

std::vector<double> leaf_density(const LeafIndex& index, const Ensemble& model,
                                 const Dataset& probes) {
  if (probes.empty()) throw InvalidInput("leaf_density needs at least one probe");
  if (index.n_trees() != model.n_trees()) throw InvalidInput("index does not match model");
  std::vector<double> out(model.n_trees(), 0.0);
  const double n = static_cast<double>(index.n_train());
  for (std::size_t t = 0; t < model.n_trees(); ++t) {
    double total = 0.0;
    for (std::size_t p = 0; p < probes.n_rows(); ++p) {
      total += static_cast<double>(index.lookup(t, model.tree(t).leaf_id(probes.row(p))).size());
    }
    out[t] = total / (n * static_cast<double>(probes.n_rows()));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'I', 'B', 'U', 'G', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_vec(std::ofstream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("index cache is truncated");
  return v;
}

template <typename T>
std::vector<T> get_vec(std::ifstream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 34)) throw InvalidInput("index cache is corrupt");
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw InvalidInput("index cache is truncated");
  return v;
}

}  // namespace

std::uint64_t model_hash(const Ensemble& model) {
  const std::string json = to_native_json(model);
  return fnv1a(14695981039346656037ULL, json.data(), json.size());
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto& x = data.features();
  h = fnv1a(h, x.data(), x.size() * sizeof(double));
  const auto& y = data.targets();
  return fnv1a(h, y.data(), y.size() * sizeof(double));
}

IndexCacheKey index_cache_key(const Ensemble& model, const Dataset& train) {
  return {model_hash(model), dataset_hash(train)};
}

void save_index(const LeafIndex& index, const IndexCacheKey& key, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put(out, kIndexVersion);
  put(out, key.model_hash);
  put(out, key.data_hash);
  put_vec(out, index.targets());
  put<std::uint64_t>(out, index.n_trees());
  for (const auto& tl : index.tree_lists()) {
    put_vec(out, tl.offsets);
    put_vec(out, tl.ids);
  }
}

LeafIndex load_index(const std::string& path, const Ensemble& model, std::uint64_t data_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("'" + path + "' is not an index cache");
  if (get<std::uint32_t>(in) != kIndexVersion) throw InvalidInput("unsupported index cache version");
  if (get<std::uint64_t>(in) != model_hash(model))
    throw InvalidInput("index cache was built for a different model");
  const auto stored_data = get<std::uint64_t>(in);
  if (data_hash != 0 && stored_data != data_hash)
    throw InvalidInput("index cache was built for a different dataset");
  auto targets = get_vec<double>(in);
  const auto n_trees = get<std::uint64_t>(in);
  std::vector<LeafIndex::TreeLists> trees(n_trees);
  for (auto& tl : trees) {
    tl.offsets = get_vec<std::uint32_t>(in);
    tl.ids = get_vec<std::uint32_t>(in);
  }
  if (n_trees != model.n_trees()) throw InvalidInput("index cache tree count does not match model");
  return LeafIndex(std::move(trees), std::move(targets));
}

}  // namespace ibug
