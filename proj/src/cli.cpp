#include "ibug/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "ibug/affinity.hpp"
#include "ibug/csv.hpp"
#include "ibug/cv.hpp"
#include "ibug/error.hpp"
#include "ibug/leaf_index.hpp"
#include "ibug/metrics.hpp"
#include "ibug/model_io.hpp"
#include "ibug/parallel.hpp"
#include "ibug/posterior.hpp"
#include "ibug/scenarios.hpp"
#include "ibug/timing.hpp"
#include "ibug/trainer.hpp"
#include "ibug/tuning.hpp"
#include "json.hpp"

namespace ibug {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v < 0) throw UsageError(std::string(flag) + ": bad integer '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) throw UsageError(std::string(flag) + ": bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<DistributionFamily> parse_family_list(const std::string& text) {
  if (text == "all") return all_families();
  std::vector<DistributionFamily> out;
  for (const auto& item : split_list(text)) out.push_back(parse_family(item));
  return out;
}

// Expands `--config file.json` into flags placed right after the subcommand
// name, so flags given on the command line take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path) return rest;
  json doc;
  try {
    doc = json::parse(read_file(*path));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config file: ") + e.what(), 1, e.byte);
  }
  if (!doc.is_object()) throw InvalidInput("config file must hold a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      flags.push_back(flag);
      flags.push_back(joined);
    } else if (value.is_string()) {
      flags.push_back(flag);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back(flag);
      flags.push_back(value.dump());
    } else {
      throw InvalidInput("config key '" + key + "' has an unsupported value");
    }
  }
  if (rest.empty()) return flags;
  std::vector<std::string> out = {rest.front()};
  out.insert(out.end(), flags.begin(), flags.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

Ensemble load_model(const std::string& path, const std::string& format) {
  const std::string bytes = read_file(path);
  if (format != "auto") return parse_model(bytes, parse_dump_format(format));
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".txt") == 0)
    return parse_model(bytes, DumpFormat::kLightGbmText);
  if (bytes.find("\"ibug-native\"") != std::string::npos) return parse_model(bytes, DumpFormat::kNativeJson);
  return parse_model(bytes, DumpFormat::kXgboostJson);
}

bool header_has_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream cells(header);
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    if (cell == column) return true;
  }
  return false;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

struct TrainFlags {
  TrainConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--trees", cfg.n_trees, "Number of boosting rounds");
    app->add_option("--learning-rate", cfg.learning_rate, "Shrinkage");
    app->add_option("--max-depth", cfg.max_depth, "Maximum tree depth (<= 0 for unlimited)");
    app->add_option("--min-leaf", cfg.min_leaf_size, "Minimum training rows per leaf");
    app->add_option("--lambda", cfg.lambda, "L2 penalty on leaf values");
    app->add_option("--subsample", cfg.subsample_fraction, "Row subsampling fraction per tree");
    app->add_option("--train-seed", cfg.seed, "Trainer seed");
  }
};

struct TreeFlags {
  std::string strategy = "all";
  std::size_t tau = 0;
  std::uint64_t seed = 0;
  void add(CLI::App* app, const std::string& default_strategy = "all") {
    strategy = default_strategy;
    app->add_option("--tree-sample", strategy, "Tree subset: all, random, first or last");
    app->add_option("--tau", tau, "Number of trees used for affinities");
    app->add_option("--seed", seed, "Seed for random tree sampling");
  }
  TreeSubset subset() const { return {parse_tree_sampling(strategy), tau, seed}; }
};

struct ModelFlags {
  std::string model;
  std::string format = "auto";
  void add(CLI::App* app, bool required) {
    auto* opt = app->add_option("--model", model, "Model file (native JSON, LightGBM text or XGBoost JSON)");
    if (required) opt->required();
    app->add_option("--model-format", format, "auto, native-json, lightgbm-text or xgboost-json");
  }
};

json prediction_record(const ProbabilisticPrediction& p, std::optional<double> y) {
  json rec;
  rec["mu"] = p.mu;
  rec["sigma2"] = p.sigma2;
  rec["family"] = std::string(to_string(p.dist.family()));
  json params = json::object();
  for (const auto& [name, value] : p.dist.params()) params[name] = value;
  rec["params"] = params;
  json q = json::object();
  for (double level : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    char key[16];
    std::snprintf(key, sizeof(key), "%.2f", level);
    q[key] = p.dist.quantile(level);
  }
  rec["quantiles"] = q;
  if (y) {
    rec["y"] = *y;
    rec["nll"] = nll(p.dist, *y);
    rec["crps"] = crps(p.dist, *y);
  }
  return rec;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFitError:
    case ErrorKind::kNumericError:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic predictions for gradient-boosted regression trees", "ibug"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string target = "target";
  std::string out_path;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a packaged synthetic scenario as CSV");
  std::string scenario_name;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--scenario", scenario_name, "Scenario name")->required();
  gen->add_option("--n", gen_n, "Rows (0 uses the scenario default)");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", out_path, "Output CSV (default stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a CSV and write native JSON");
  std::string train_csv;
  TrainFlags train_flags;
  train_cmd->add_option("--data", train_csv, "Training CSV")->required();
  train_cmd->add_option("--target", target, "Target column name or index");
  train_cmd->add_option("--out", out_path, "Output model file (default stdout)");
  train_flags.add(train_cmd);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build the leaf index cache for a model and training CSV");
  ModelFlags index_model;
  index_model.add(index_cmd, true);
  index_cmd->add_option("--data", train_csv, "Training CSV")->required();
  index_cmd->add_option("--target", target, "Target column name or index");
  index_cmd->add_option("--out", out_path, "Output cache file")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Tune k, rho, calibration and family on a validation CSV");
  ModelFlags tune_model;
  TrainFlags tune_train;
  TreeFlags tune_trees;
  std::string val_csv;
  std::string k_grid;
  std::string gamma_grid;
  std::string delta_grid;
  std::string families = "normal";
  std::string metric = "nll";
  std::string index_path;
  tune_model.add(tune_cmd, false);
  tune_train.add(tune_cmd);
  tune_trees.add(tune_cmd);
  tune_cmd->add_option("--train", train_csv, "Training CSV")->required();
  tune_cmd->add_option("--val", val_csv, "Validation CSV")->required();
  tune_cmd->add_option("--target", target, "Target column name or index");
  tune_cmd->add_option("--k-grid", k_grid, "Comma-separated k candidates");
  tune_cmd->add_option("--gamma-grid", gamma_grid, "Comma-separated gamma candidates");
  tune_cmd->add_option("--delta-grid", delta_grid, "Comma-separated delta candidates");
  tune_cmd->add_option("--families", families, "Comma-separated families, or 'all'");
  tune_cmd->add_option("--metric", metric, "Tuning metric: nll or crps");
  tune_cmd->add_option("--index", index_path, "Leaf index cache");
  tune_cmd->add_option("--out", out_path, "Report JSON (default stdout)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Write JSON-lines probabilistic predictions");
  ModelFlags predict_model;
  TreeFlags predict_trees;
  std::string probe_csv;
  std::string report_path;
  PosteriorConfig pcfg;
  std::string family = "normal";
  predict_model.add(predict_cmd, true);
  predict_trees.add(predict_cmd);
  predict_cmd->add_option("--train", train_csv, "Training CSV (needed unless --index is given)");
  predict_cmd->add_option("--data", probe_csv, "CSV of rows to predict")->required();
  predict_cmd->add_option("--target", target, "Target column name; scored when present in --data");
  predict_cmd->add_option("--index", index_path, "Leaf index cache");
  predict_cmd->add_option("--report", report_path, "Tune report supplying k, rho, gamma, delta, family");
  predict_cmd->add_option("--k", pcfg.k, "Neighbors");
  predict_cmd->add_option("--rho", pcfg.rho, "Variance floor");
  predict_cmd->add_option("--gamma", pcfg.gamma, "Variance multiplier");
  predict_cmd->add_option("--delta", pcfg.delta, "Variance offset");
  predict_cmd->add_option("--family", family, "Output distribution family");
  predict_cmd->add_option("--out", out_path, "Output JSONL (default stdout)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Cross-validated benchmark");
  TrainFlags bench_train;
  TreeFlags bench_trees;
  ModelFlags bench_model;
  std::string data_csv;
  std::string method = "ibug-native";
  std::string scores_path;
  std::string summary_path;
  std::size_t folds = 10;
  std::uint64_t bench_seed = 0;
  std::size_t bench_n = 0;
  std::string top_feature_grid;
  bench_train.add(bench_cmd);
  bench_trees.add(bench_cmd);
  bench_model.add(bench_cmd, false);
  auto* data_opt = bench_cmd->add_option("--data", data_csv, "Dataset CSV");
  bench_cmd->add_option("--scenario", scenario_name, "Packaged scenario instead of --data")->excludes(data_opt);
  bench_cmd->add_option("--n", bench_n, "Scenario rows (0 uses the default)");
  bench_cmd->add_option("--target", target, "Target column name or index");
  bench_cmd->add_option("--method", method, "ibug-native, ibug-external-model or knn-baseline");
  bench_cmd->add_option("--folds", folds, "Number of folds");
  bench_cmd->add_option("--cv-seed", bench_seed, "Fold and split seed");
  bench_cmd->add_option("--k-grid", k_grid, "Comma-separated k candidates");
  bench_cmd->add_option("--gamma-grid", gamma_grid, "Comma-separated gamma candidates");
  bench_cmd->add_option("--delta-grid", delta_grid, "Comma-separated delta candidates");
  bench_cmd->add_option("--families", families, "Comma-separated families, or 'all'");
  bench_cmd->add_option("--metric", metric, "Tuning metric: nll or crps");
  bench_cmd->add_option("--top-features", top_feature_grid, "kNN baseline feature-count grid");
  bench_cmd->add_option("--scores", scores_path, "Per-instance scores CSV");
  bench_cmd->add_option("--summary", summary_path, "Summary JSON (default stdout)");

  // leaf-density
  auto* density_cmd = app.add_subcommand("leaf-density", "Per-tree leaf density table");
  ModelFlags density_model;
  density_model.add(density_cmd, true);
  density_cmd->add_option("--train", train_csv, "Training CSV")->required();
  density_cmd->add_option("--probes", probe_csv, "Probe CSV (default: the training CSV)");
  density_cmd->add_option("--target", target, "Target column name or index");
  density_cmd->add_option("--out", out_path, "Output CSV (default stdout)");

  // timing
  auto* timing_cmd = app.add_subcommand("timing", "Prediction time and NLL per number of trees");
  ModelFlags timing_model;
  TreeFlags timing_trees;
  std::string taus;
  std::size_t repeats = 3;
  timing_model.add(timing_cmd, true);
  timing_trees.add(timing_cmd, "first");
  timing_cmd->add_option("--train", train_csv, "Training CSV")->required();
  timing_cmd->add_option("--probes", probe_csv, "Probe CSV with targets")->required();
  timing_cmd->add_option("--target", target, "Target column name or index");
  timing_cmd->add_option("--taus", taus, "Comma-separated tree counts")->required();
  timing_cmd->add_option("--repeats", repeats, "Repeats per tau; the fastest is kept");
  timing_cmd->add_option("--k", pcfg.k, "Neighbors");
  timing_cmd->add_option("--rho", pcfg.rho, "Variance floor");
  timing_cmd->add_option("--gamma", pcfg.gamma, "Variance multiplier");
  timing_cmd->add_option("--delta", pcfg.delta, "Variance offset");
  timing_cmd->add_option("--family", family, "Output distribution family");
  timing_cmd->add_option("--out", out_path, "Output CSV (default stdout)");

  try {
    apply_thread_env();
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "usage error: " << e.what() << '\n';
      return 2;
    }

    auto grids_from_flags = [&](std::size_t n_train) {
      CandidateGrids g;
      g.k_grid = k_grid.empty() ? default_k_grid(n_train) : parse_size_list(k_grid, "--k-grid");
      g.gamma_grid = gamma_grid.empty() ? default_gamma_grid() : parse_double_list(gamma_grid, "--gamma-grid");
      g.delta_grid = delta_grid.empty() ? default_delta_grid() : parse_double_list(delta_grid, "--delta-grid");
      g.family_grid = parse_family_list(families);
      g.metric = parse_metric(metric);
      return g;
    };

    if (gen->parsed()) {
      const Scenario& sc = find_scenario(scenario_name);
      emit(out_path, to_csv(sc.generate(gen_n == 0 ? sc.default_n : gen_n, gen_seed)), out);
    } else if (train_cmd->parsed()) {
      const Dataset data = load_csv(train_csv, target);
      emit(out_path, to_native_json(train(data, train_flags.cfg)), out);
    } else if (index_cmd->parsed()) {
      const Ensemble model = load_model(index_model.model, index_model.format);
      const Dataset data = load_csv(train_csv, target);
      save_index(build_index(model, data), index_cache_key(model, data), out_path);
    } else if (tune_cmd->parsed()) {
      const Dataset train_data = load_csv(train_csv, target);
      const Dataset val = load_csv(val_csv, target);
      const Ensemble model = tune_model.model.empty() ? train(train_data, tune_train.cfg)
                                                      : load_model(tune_model.model, tune_model.format);
      const LeafIndex index = index_path.empty() ? build_index(model, train_data)
                                                 : load_index(index_path, model, dataset_hash(train_data));
      const CandidateGrids grids = grids_from_flags(index.n_train());
      const auto trees = select_trees(model.n_trees(), tune_trees.subset());
      const TuneResult result = tune(val, model, index, trees, grids);
      emit(out_path, tune_report_json(result, grids) + "\n", out);
    } else if (predict_cmd->parsed()) {
      const Ensemble model = load_model(predict_model.model, predict_model.format);
      LeafIndex index;
      if (!index_path.empty()) {
        const std::uint64_t h = train_csv.empty() ? 0 : dataset_hash(load_csv(train_csv, target));
        index = load_index(index_path, model, h);
      } else if (!train_csv.empty()) {
        index = build_index(model, load_csv(train_csv, target));
      } else {
        throw UsageError("predict needs --train or --index");
      }
      if (!report_path.empty()) {
        const json rep = json::parse(read_file(report_path));
        const json& c = rep.at("chosen");
        pcfg.k = c.at("k").get<std::size_t>();
        pcfg.rho = c.at("rho").get<double>();
        pcfg.gamma = c.at("gamma").get<double>();
        pcfg.delta = c.at("delta").get<double>();
        family = c.at("family").get<std::string>();
        // explicit flags still win
        auto* k_opt = predict_cmd->get_option("--k");
        if (k_opt->count() > 0) pcfg.k = k_opt->as<std::size_t>();
        for (const char* name : {"--rho", "--gamma", "--delta"}) {
          auto* opt = predict_cmd->get_option(name);
          if (opt->count() == 0) continue;
          const double v = opt->as<double>();
          if (std::string(name) == "--rho") pcfg.rho = v;
          if (std::string(name) == "--gamma") pcfg.gamma = v;
          if (std::string(name) == "--delta") pcfg.delta = v;
        }
        auto* f_opt = predict_cmd->get_option("--family");
        if (f_opt->count() > 0) family = f_opt->as<std::string>();
      }
      pcfg.family = parse_family(family);
      const bool scored = header_has_column(probe_csv, target);
      const Dataset probes = load_csv(probe_csv, scored ? std::optional<std::string>(target) : std::nullopt);
      const auto trees = select_trees(model.n_trees(), predict_trees.subset());
      const auto preds = predict_probabilistic_batch(probes, model, index, trees, pcfg);
      std::string text;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto y = scored ? std::optional<double>(probes.targets()[i]) : std::nullopt;
        text += prediction_record(preds[i], y).dump() + '\n';
      }
      emit(out_path, text, out);
    } else if (bench_cmd->parsed()) {
      Dataset data;
      if (!scenario_name.empty()) {
        const Scenario& sc = find_scenario(scenario_name);
        data = sc.generate(bench_n == 0 ? sc.default_n : bench_n, bench_seed);
        if (bench_cmd->get_option("--trees")->count() == 0 && bench_cmd->get_option("--max-depth")->count() == 0)
          bench_train.cfg = sc.train_config;
      } else if (!data_csv.empty()) {
        data = load_csv(data_csv, target);
      } else {
        throw UsageError("bench needs --data or --scenario");
      }
      CvConfig cv;
      cv.protocol.n_folds = folds;
      cv.protocol.test_fraction = 1.0 / static_cast<double>(folds);
      cv.protocol.seed = bench_seed;
      cv.protocol.metric = parse_metric(metric);
      cv.method = parse_method(method);
      cv.train_config = bench_train.cfg;
      cv.trees = bench_trees.subset();
      if (!k_grid.empty()) cv.grids.k_grid = parse_size_list(k_grid, "--k-grid");
      if (!gamma_grid.empty()) cv.grids.gamma_grid = parse_double_list(gamma_grid, "--gamma-grid");
      if (!delta_grid.empty()) cv.grids.delta_grid = parse_double_list(delta_grid, "--delta-grid");
      cv.grids.family_grid = parse_family_list(families);
      if (!k_grid.empty()) cv.knn_grid.k_grid = cv.grids.k_grid;
      if (!top_feature_grid.empty()) cv.knn_grid.top_feature_grid = parse_size_list(top_feature_grid, "--top-features");
      if (cv.method == Method::kIbugExternalModel) {
        if (bench_model.model.empty()) throw UsageError("ibug-external-model needs --model");
        cv.external_model = load_model(bench_model.model, bench_model.format);
      }
      const auto results = run_cv(data, cv);
      if (!scores_path.empty()) write_file(scores_path, scores_csv(results));
      emit(summary_path, summary_json(results, cv) + "\n", out);
    } else if (density_cmd->parsed()) {
      const Ensemble model = load_model(density_model.model, density_model.format);
      const Dataset data = load_csv(train_csv, target);
      const LeafIndex index = build_index(model, data);
      const Dataset probes = probe_csv.empty() ? data : load_csv(probe_csv, std::nullopt);
      const auto density = leaf_density(index, model, probes);
      std::string text = "tree,n_leaves,mean_leaf_fraction\n";
      char buf[96];
      double total = 0.0;
      double leaves = 0.0;
      for (std::size_t t = 0; t < density.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", t, index.n_leaves(t), density[t]);
        text += buf;
        total += density[t];
        leaves += static_cast<double>(index.n_leaves(t));
      }
      const double nt = density.empty() ? 1.0 : static_cast<double>(density.size());
      std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g\n", leaves / nt, total / nt);
      text += buf;
      emit(out_path, text, out);
    } else if (timing_cmd->parsed()) {
      const Ensemble model = load_model(timing_model.model, timing_model.format);
      const LeafIndex index = build_index(model, load_csv(train_csv, target));
      const Dataset probes = load_csv(probe_csv, target);
      pcfg.family = parse_family(family);
      TimingOptions opts;
      opts.strategy = parse_tree_sampling(timing_trees.strategy);
      opts.seed = timing_trees.seed;
      opts.repeats = repeats;
      const auto rows = benchmark_timing(model, index, probes, parse_size_list(taus, "--taus"), pcfg, opts);
      emit(out_path, timing_csv(rows), out);
    }
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "invalid-input: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace ibug
