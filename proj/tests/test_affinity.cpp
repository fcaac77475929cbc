#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "ibug/affinity.hpp"
#include "ibug/error.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/parallel.hpp"
#include "test_support.hpp"

using namespace ibug;

TEST_CASE("select_trees strategies") {
  CHECK(select_trees(10, {TreeSampling::kFirstToLast, 3, 0}) == std::vector<std::size_t>{0, 1, 2});
  CHECK(select_trees(10, {TreeSampling::kLastToFirst, 3, 0}) == std::vector<std::size_t>{7, 8, 9});
  for (auto s : {TreeSampling::kAll, TreeSampling::kUniformRandom, TreeSampling::kFirstToLast,
                 TreeSampling::kLastToFirst}) {
    CHECK(select_trees(10, {s, 10, 1}) == all_trees(10));
  }
  const auto r = select_trees(50, {TreeSampling::kUniformRandom, 7, 3});
  CHECK(r.size() == 7);
  CHECK(std::is_sorted(r.begin(), r.end()));
  CHECK(std::adjacent_find(r.begin(), r.end()) == r.end());
  CHECK(r == select_trees(50, {TreeSampling::kUniformRandom, 7, 3}));
  CHECK_THROWS_AS(select_trees(10, {TreeSampling::kFirstToLast, 11, 0}), InvalidInput);
  CHECK_THROWS_AS(select_trees(10, {TreeSampling::kFirstToLast, 0, 0}), InvalidInput);
  CHECK(parse_tree_sampling("first") == TreeSampling::kFirstToLast);
  CHECK(parse_tree_sampling("last-to-first") == TreeSampling::kLastToFirst);
  CHECK(parse_tree_sampling("random") == TreeSampling::kUniformRandom);
}

TEST_CASE("trivial affinities") {
  const Dataset d = testing::random_dataset(4, 2, 1);
  const Ensemble m(2, 0.0, 1.0, 0.0, {Tree::constant(0.0)});
  const LeafIndex idx = build_index(m, d);
  const auto aff = compute_affinities(d.row(0), m, idx, all_trees(1));
  CHECK(aff.counts == std::vector<std::uint32_t>{1, 1, 1, 1});
}

TEST_CASE("self affinity and brute-force oracle") {
  const Dataset d = testing::random_dataset(100, 4, 7, 0.05);
  const Ensemble m = testing::random_model(d, 8, 5);
  const LeafIndex idx = build_index(m, d);
  const auto trees = all_trees(m.n_trees());
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(compute_affinities(d.row(i), m, idx, trees).counts[i] == m.n_trees());
  }
  const Dataset probes = testing::random_dataset(20, 4, 70, 0.1);
  const auto batch = compute_affinities_batch(probes, m, idx, trees);
  for (std::size_t p = 0; p < probes.n_rows(); ++p) {
    const auto expect = testing::brute_force_affinity(probes.row(p), m, d, trees);
    CHECK(compute_affinities(probes.row(p), m, idx, trees).counts == expect);
    CHECK(batch[p].counts == expect);
    std::uint64_t total = std::accumulate(expect.begin(), expect.end(), std::uint64_t{0});
    std::uint64_t sizes = 0;
    for (std::size_t t : trees) sizes += idx.lookup(t, m.tree(t).leaf_id(probes.row(p))).size();
    CHECK(total == sizes);
  }
}

TEST_CASE("subset additivity") {
  const Dataset d = testing::random_dataset(150, 3, 9);
  const Ensemble m = testing::random_model(d, 10, 12);
  const LeafIndex idx = build_index(m, d);
  const std::vector<std::size_t> s1 = {0, 3, 5, 11};
  const std::vector<std::size_t> s2 = {1, 2, 7};
  std::vector<std::size_t> both = {0, 1, 2, 3, 5, 7, 11};
  const auto x = d.row(17);
  const auto a1 = compute_affinities(x, m, idx, s1).counts;
  const auto a2 = compute_affinities(x, m, idx, s2).counts;
  const auto ab = compute_affinities(x, m, idx, both);
  CHECK(ab.n_trees_used == 7);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    CHECK(ab.counts[i] == a1[i] + a2[i]);
    CHECK(ab.counts[i] <= 7);
  }
}

TEST_CASE("top_k order, ties and nestedness") {
  const std::vector<double> targets = {10, 20, 30, 40, 50};
  AffinityVector equal{{2, 2, 2, 2, 2}, 2};
  CHECK(top_k(equal, 3, targets).ids == std::vector<std::uint32_t>{0, 1, 2});
  AffinityVector three{{5, 1, 9}, 9};
  const auto one = top_k(three, 1, std::vector<double>{1, 2, 3});
  CHECK(one.ids == std::vector<std::uint32_t>{2});
  CHECK(one.targets == std::vector<double>{3});

  std::mt19937_64 rng(5);
  AffinityVector rnd;
  for (int i = 0; i < 300; ++i) rnd.counts.push_back(static_cast<std::uint32_t>(rng() % 6));
  std::vector<double> t(300, 0.0);
  std::vector<std::uint32_t> sorted(300);
  std::iota(sorted.begin(), sorted.end(), 0u);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](auto a, auto b) { return rnd.counts[a] > rnd.counts[b]; });
  CHECK(top_k(rnd, 300, t).ids == sorted);
  CHECK(affinity_order(rnd) == sorted);
  for (std::size_t k : {1, 7, 50, 299}) {
    const auto small = top_k(rnd, k, t).ids;
    const auto big = top_k(rnd, k + 1, t).ids;
    CHECK(std::equal(small.begin(), small.end(), big.begin()));
    CHECK(take_first(sorted, k, t).ids == small);
  }
  CHECK_THROWS_AS(top_k(rnd, 301, t), InvalidInput);
}

TEST_CASE("batch result does not depend on thread count") {
  const Dataset d = testing::random_dataset(200, 4, 3, 0.05);
  const Ensemble m = testing::random_model(d, 2, 15);
  const LeafIndex idx = build_index(m, d);
  const Dataset probes = testing::random_dataset(40, 4, 33);
  const auto trees = all_trees(m.n_trees());
  std::vector<AffinityVector> one;
  {
    ScopedThreads s(1);
    one = compute_affinities_batch(probes, m, idx, trees);
  }
  ScopedThreads s(4);
  const auto four = compute_affinities_batch(probes, m, idx, trees);
  for (std::size_t p = 0; p < probes.n_rows(); ++p) {
    CHECK(one[p].counts == four[p].counts);
    CHECK(top_k(one[p], 10, idx.targets()).ids == top_k(four[p], 10, idx.targets()).ids);
  }
}
