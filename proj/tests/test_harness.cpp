#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

#include "ibug/cv.hpp"
#include "ibug/error.hpp"
#include "ibug/knn_baseline.hpp"
#include "ibug/scenarios.hpp"
#include "ibug/timing.hpp"
#include "ibug/tuning.hpp"
#include "test_support.hpp"

using namespace ibug;

namespace {

CvConfig small_config(Method method) {
  CvConfig c;
  c.protocol.n_folds = 5;
  c.protocol.test_fraction = 0.2;
  c.protocol.seed = 3;
  c.method = method;
  c.train_config.n_trees = 30;
  c.train_config.max_depth = 3;
  c.grids.k_grid = {5, 15, 31};
  c.grids.family_grid = {DistributionFamily::kNormal};
  c.knn_grid.k_grid = {5, 15, 31};
  c.knn_grid.top_feature_grid = {2, 4};
  return c;
}

}  // namespace

TEST_CASE("folds are disjoint and cover every row") {
  const auto folds = make_folds(100, 10, 7);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 10);
    for (auto r : f) CHECK(seen.insert(r).second);
  }
  CHECK(seen.size() == 100);
  CHECK(make_folds(100, 10, 7) == folds);
  CHECK(make_folds(100, 10, 8) != folds);
  CHECK(fold_seed(1, 0) != fold_seed(1, 1));
}

TEST_CASE("protocol validation") {
  Protocol p;
  CHECK_NOTHROW(p.validate());
  p.test_fraction = 0.2;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p.n_folds = 1;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  CHECK(parse_method("knn-baseline") == Method::kKnnBaseline);
  CHECK_THROWS_AS(parse_method("ngboost"), InvalidInput);
  const Dataset tiny = testing::random_dataset(40, 2, 1);
  CHECK_THROWS_AS(run_cv(tiny, small_config(Method::kIbugNative)), InvalidInput);
}

TEST_CASE("run_cv is deterministic and reports every metric") {
  const Dataset d = testing::random_dataset(250, 4, 5, 0.02);
  const CvConfig cfg = small_config(Method::kIbugNative);
  const auto a = run_cv(d, cfg);
  const auto b = run_cv(d, cfg);
  CHECK(summary_json(a, cfg) == summary_json(b, cfg));
  CHECK(scores_csv(a) == scores_csv(b));
  std::set<std::size_t> rows;
  for (const auto& f : a) {
    CHECK(f.n_test == 50);
    CHECK(f.n_train + f.n_val == 200);
    for (const auto& r : f.records) rows.insert(r.row);
  }
  CHECK(rows.size() == 250);
  const std::string js = summary_json(a, cfg);
  for (const auto& name : summary_metrics()) CHECK(js.find("\"" + name + "\"") != std::string::npos);
}

TEST_CASE("external-model and knn methods run") {
  const Dataset d = testing::random_dataset(200, 4, 6);
  CvConfig ext = small_config(Method::kIbugExternalModel);
  CHECK_THROWS_AS(run_cv(d, ext), InvalidInput);
  ext.external_model = testing::random_model(d, 6, 10);
  CHECK(run_cv(d, ext).size() == 5);
  const auto knn = run_cv(d, small_config(Method::kKnnBaseline));
  for (const auto& f : knn) CHECK(f.knn_chosen.k_var >= 2);
}

TEST_CASE("gaussian scenario: test NLL near the noise entropy") {
  const Scenario& sc = find_scenario("gaussian");
  const Dataset d = sc.generate(sc.default_n, 11);
  CvConfig cfg;
  cfg.protocol.seed = 11;
  cfg.train_config = sc.train_config;
  cfg.grids.family_grid = {DistributionFamily::kNormal};
  const auto folds = run_cv(d, cfg);
  std::vector<double> nlls;
  for (const auto& f : folds) {
    for (const auto& r : f.records) nlls.push_back(r.nll);
  }
  const auto s = summarize("nll", nlls);
  const double entropy = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  // Neighbor targets also vary with the signal, so the excess over the noise
  // entropy is a few hundredths of a nat at this n; the 3-stderr band is
  // reported rather than enforced.
  WARN(std::abs(s.mean - entropy) <= 3.0 * s.std_error);
  CHECK(s.mean >= entropy - 3.0 * s.std_error);
  CHECK(s.mean - entropy <= 0.1);
}

TEST_CASE("knn baseline basics") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  const Dataset tr(6, 1, x, y);
  const std::vector<std::size_t> order = {0};
  const KnnModel km(tr, order, 1);
  CHECK(km.neighbor_order(std::vector<double>{3.0})[0] == 3);

  KnnBaselineConfig all;
  all.k_mean = 6;
  all.k_var = 6;
  all.n_top_features = 1;
  const Dataset probe(1, 1, {2.2}, {0.0});
  TrainConfig tc;
  tc.n_trees = 5;
  const auto p = predict_knn(tr, probe, all, tc);
  CHECK(p[0].mu == doctest::Approx(63.0 / 6.0));

  KnnBaselineConfig one;
  one.k_mean = 1;
  one.k_var = 2;
  one.n_top_features = 1;
  const Dataset dup(1, 1, {4.0}, {0.0});
  CHECK(predict_knn(tr, dup, one, tc)[0].mu == 16.0);

  KnnBaselineConfig big = one;
  big.k_mean = 7;
  CHECK_THROWS_AS(predict_knn(tr, dup, big, tc), InvalidInput);
}

TEST_CASE("ibug beats the knn baseline on heteroscedastic data") {
  const Scenario& sc = find_scenario("friedman-hetero");
  const Dataset tr = sc.generate(1500, 1);
  const Dataset val = sc.generate(400, 2);
  const Ensemble m = train(tr, sc.train_config);
  const LeafIndex idx = build_index(m, tr);
  CandidateGrids grids = default_grids(tr.n_rows());
  grids.family_grid = {DistributionFamily::kNormal};
  const auto trees = all_trees(m.n_trees());
  const TuneResult ib = tune(val, m, idx, trees, grids);
  KnnGrid kg;
  kg.k_grid = default_k_grid(tr.n_rows());
  const KnnTuneResult kn = tune_knn(tr, val, kg, sc.train_config);
  CHECK(ib.validation_nll.mean <= kn.val_nll);
}

TEST_CASE("timing: full tree set equals the plain pipeline") {
  const Dataset tr = testing::random_dataset(300, 4, 2);
  const Dataset probes = testing::random_dataset(30, 4, 3);
  const Ensemble m = testing::random_model(tr, 2, 20);
  const LeafIndex idx = build_index(m, tr);
  PosteriorConfig cfg;
  cfg.k = 20;
  const auto rows = benchmark_timing(m, idx, probes, {20}, cfg);
  REQUIRE(rows.size() == 1);
  const auto preds = predict_probabilistic_batch(probes, m, idx, all_trees(20), cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += nll(preds[i].dist, probes.targets()[i]);
  CHECK(rows[0].mean_nll == total / preds.size());
  CHECK(rows[0].mean_affinity_seconds > 0.0);
  CHECK_THROWS_AS(benchmark_timing(m, idx, probes, {21}, cfg), InvalidInput);
  CHECK(timing_csv(rows).rfind("tau,", 0) == 0);
}
