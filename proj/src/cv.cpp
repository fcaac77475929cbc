#include "ibug/cv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "ibug/error.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/parallel.hpp"
#include "json.hpp"

namespace ibug {

void Protocol::validate() const {
  if (n_folds < 2) throw InvalidInput("n_folds must be at least 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must lie in (0, 1)");
  if (std::abs(test_fraction - 1.0 / static_cast<double>(n_folds)) > 1e-9)
    throw InvalidInput("test_fraction must equal 1 / n_folds");
  if (!(val_fraction_of_train > 0.0 && val_fraction_of_train < 1.0))
    throw InvalidInput("val_fraction_of_train must lie in (0, 1)");
}

Method parse_method(std::string_view tag) {
  if (tag == "ibug-native") return Method::kIbugNative;
  if (tag == "ibug-external-model") return Method::kIbugExternalModel;
  if (tag == "knn-baseline") return Method::kKnnBaseline;
  throw InvalidInput("unknown method '" + std::string(tag) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kIbugNative: return "ibug-native";
    case Method::kIbugExternalModel: return "ibug-external-model";
    case Method::kKnnBaseline: return "knn-baseline";
  }
  return "unknown";
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2 || n < n_folds) throw InvalidInput("need at least n_folds rows and 2 folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> folds(n_folds);
  for (std::size_t f = 0; f < n_folds; ++f) {
    const std::size_t lo = f * n / n_folds;
    const std::size_t hi = (f + 1) * n / n_folds;
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  // splitmix64 step over (seed, fold)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (fold + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

const std::vector<std::string>& summary_metrics() {
  static const std::vector<std::string> kNames = {"nll", "crps", "check", "interval", "rmse", "mace", "sharpness"};
  return kNames;
}

namespace {

CandidateGrids resolve_grids(const CandidateGrids& g, std::size_t n_train, Metric metric) {
  CandidateGrids out = g;
  if (out.k_grid.empty()) out.k_grid = default_k_grid(n_train);
  std::erase_if(out.k_grid, [&](std::size_t k) { return k > n_train; });
  if (out.k_grid.empty()) throw InvalidInput("no k candidate fits the inner training set");
  if (out.gamma_grid.empty()) out.gamma_grid = default_gamma_grid();
  if (out.delta_grid.empty()) out.delta_grid = default_delta_grid();
  if (out.family_grid.empty()) out.family_grid = {DistributionFamily::kNormal};
  out.metric = metric;
  return out;
}

void score_fold(FoldResult& fr, const Dataset& test, const std::vector<std::size_t>& rows,
                const std::vector<ProbabilisticPrediction>& preds) {
  const std::size_t m = test.n_rows();
  fr.records.resize(m);
  std::vector<FittedDistribution> dists(m);
  std::vector<double> mus(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double y = test.targets()[j];
    const auto& p = preds[j];
    TestRecord& r = fr.records[j];
    r.row = rows[j];
    r.y = y;
    r.mu = p.mu;
    r.sigma2 = p.sigma2;
    r.nll = nll(p.dist, y);
    r.crps = crps(p.dist, y);
    r.check = check_score(p.dist, y);
    r.interval = interval_score(p.dist, y);
    dists[j] = p.dist;
    mus[j] = p.mu;
  }
  auto column = [&](auto member) {
    std::vector<double> v;
    for (const auto& r : fr.records) v.push_back(r.*member);
    return v;
  };
  fr.summaries.push_back(summarize("nll", column(&TestRecord::nll)));
  fr.summaries.push_back(summarize("crps", column(&TestRecord::crps)));
  fr.summaries.push_back(summarize("check", column(&TestRecord::check)));
  fr.summaries.push_back(summarize("interval", column(&TestRecord::interval)));
  fr.summaries.push_back(summarize("rmse", {rmse(mus, test.targets())}));
  if (m >= 20) {
    const auto cal = calibration_diagnostics(dists, test.targets());
    fr.summaries.push_back(summarize("mace", {cal.mace}));
    fr.summaries.push_back(summarize("sharpness", {cal.sharpness}));
  } else {
    double sharp = 0.0;
    for (const auto& d : dists) sharp += d.stddev() / static_cast<double>(m);
    fr.summaries.push_back(summarize("mace", {std::numeric_limits<double>::quiet_NaN()}));
    fr.summaries.push_back(summarize("sharpness", {sharp}));
  }
}

FoldResult run_fold(const Dataset& data, const CvConfig& config, std::size_t fold,
                    const std::vector<std::size_t>& test_rows) {
  const Protocol& proto = config.protocol;
  std::vector<char> is_test(data.n_rows(), 0);
  for (std::size_t r : test_rows) is_test[r] = 1;
  std::vector<std::size_t> train_rows;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    if (!is_test[r]) train_rows.push_back(r);
  }
  std::vector<std::size_t> shuffled = train_rows;
  std::mt19937_64 rng(fold_seed(proto.seed, fold));
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(proto.val_fraction_of_train * static_cast<double>(shuffled.size())));
  if (n_val < 1 || n_val >= shuffled.size()) throw InvalidInput("inner validation split is empty");
  std::vector<std::size_t> val_rows(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> inner_rows(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(inner_rows.begin(), inner_rows.end());

  const Dataset train_full = data.subset(train_rows);
  const Dataset inner = data.subset(inner_rows);
  const Dataset val = data.subset(val_rows);
  const Dataset test = data.subset(test_rows);

  FoldResult fr;
  fr.fold = fold;
  fr.n_train = inner.n_rows();
  fr.n_val = val.n_rows();
  fr.n_test = test.n_rows();

  std::vector<ProbabilisticPrediction> preds;
  if (config.method == Method::kKnnBaseline) {
    KnnGrid grid = config.knn_grid;
    if (grid.k_grid.empty()) grid.k_grid = default_k_grid(inner.n_rows());
    std::erase_if(grid.k_grid, [&](std::size_t k) { return k > inner.n_rows(); });
    const KnnTuneResult tuned = tune_knn(inner, val, grid, config.train_config);
    fr.knn_chosen = tuned.config;
    preds = predict_knn(train_full, test, tuned.config, config.train_config);
  } else {
    const CandidateGrids grids = resolve_grids(config.grids, inner.n_rows(), proto.metric);
    Ensemble inner_model;
    Ensemble full_model;
    if (config.method == Method::kIbugExternalModel) {
      inner_model = *config.external_model;
      full_model = *config.external_model;
    } else {
      inner_model = train(inner, config.train_config);
    }
    const auto inner_trees = select_trees(inner_model.n_trees(), config.trees);
    const LeafIndex inner_index = build_index(inner_model, inner);
    const TuneResult tuned = tune(val, inner_model, inner_index, inner_trees, grids);
    fr.chosen = tuned.config;

    if (config.method == Method::kIbugNative) full_model = train(train_full, config.train_config);
    const auto full_trees = select_trees(full_model.n_trees(), config.trees);
    const LeafIndex full_index = build_index(full_model, train_full);
    PosteriorConfig cfg = tuned.config;
    cfg.k = std::min(cfg.k, full_index.n_train());
    preds.resize(test.n_rows());
    for (std::size_t j = 0; j < test.n_rows(); ++j)
      preds[j] = predict_probabilistic(test.row(j), full_model, full_index, full_trees, cfg);
  }
  score_fold(fr, test, test_rows, preds);
  return fr;
}

}  // namespace

std::vector<FoldResult> run_cv(const Dataset& data, const CvConfig& config) {
  config.protocol.validate();
  if (data.n_rows() < 50) throw InvalidInput("cross-validation needs at least 50 rows");
  if (config.method == Method::kIbugExternalModel && !config.external_model)
    throw InvalidInput("ibug-external-model needs a model");
  const auto folds = make_folds(data.n_rows(), config.protocol.n_folds, config.protocol.seed);
  std::vector<FoldResult> out(folds.size());
  parallel_for(folds.size(), [&](std::size_t f) {
    try {
      out[f] = run_fold(data, config, f, folds[f]);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f) + ": " + e.what());
    }
  });
  return out;
}

std::string summary_json(const std::vector<FoldResult>& folds, const CvConfig& config) {
  using nlohmann::json;
  json doc;
  doc["version"] = 1;
  doc["method"] = std::string(to_string(config.method));
  doc["n_folds"] = config.protocol.n_folds;
  doc["seed"] = config.protocol.seed;
  doc["tuning_metric"] = std::string(to_string(config.protocol.metric));
  json metrics = json::object();
  for (std::size_t k = 0; k < summary_metrics().size(); ++k) {
    std::vector<double> per_fold;
    for (const auto& f : folds) {
      if (std::isfinite(f.summaries[k].mean)) per_fold.push_back(f.summaries[k].mean);
    }
    const ScoreSummary s = summarize(summary_metrics()[k], per_fold);
    metrics[summary_metrics()[k]] = {{"mean", s.mean}, {"stderr", s.std_error}, {"n_folds", per_fold.size()}};
  }
  doc["metrics"] = metrics;
  json jf = json::array();
  for (const auto& f : folds) {
    json e = {{"fold", f.fold}, {"n_train", f.n_train}, {"n_val", f.n_val}, {"n_test", f.n_test}};
    if (config.method == Method::kKnnBaseline) {
      e["chosen"] = {{"k_mean", f.knn_chosen.k_mean},
                     {"k_var", f.knn_chosen.k_var},
                     {"n_top_features", f.knn_chosen.n_top_features},
                     {"rho", f.knn_chosen.rho}};
    } else {
      e["chosen"] = {{"k", f.chosen.k},
                     {"rho", f.chosen.rho},
                     {"gamma", f.chosen.gamma},
                     {"delta", f.chosen.delta},
                     {"family", std::string(to_string(f.chosen.family))}};
    }
    json ms = json::object();
    for (const auto& s : f.summaries) {
      if (std::isfinite(s.mean)) {
        ms[s.metric] = {{"mean", s.mean}, {"stderr", s.std_error}};
      } else {
        ms[s.metric] = nullptr;
      }
    }
    e["metrics"] = ms;
    jf.push_back(e);
  }
  doc["folds"] = jf;
  return doc.dump(2);
}

std::string scores_csv(const std::vector<FoldResult>& folds) {
  std::string out = "fold,row,metric,value\n";
  char buf[64];
  for (const auto& f : folds) {
    for (const auto& r : f.records) {
      const std::pair<const char*, double> cells[] = {
          {"nll", r.nll}, {"crps", r.crps}, {"check", r.check}, {"interval", r.interval}};
      for (const auto& [name, v] : cells) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += std::to_string(f.fold) + ',' + std::to_string(r.row) + ',' + name + ',' + buf + '\n';
      }
    }
  }
  return out;
}

}  // namespace ibug
