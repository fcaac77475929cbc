#include "ibug/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibug/affinity.hpp"
#include "ibug/error.hpp"
#include "ibug/parallel.hpp"
#include "json.hpp"

namespace ibug {

std::vector<std::size_t> default_k_grid(std::size_t n_train) {
  static const std::size_t kGrid[] = {3,   5,   7,   9,   11,  15,  31,  61,  91,
                                      121, 151, 201, 301, 401, 501, 601, 701};
  std::vector<std::size_t> out;
  for (std::size_t k : kGrid) {
    if (k <= n_train) out.push_back(k);
  }
  if (out.empty() && n_train >= 2) out.push_back(n_train);
  return out;
}

namespace {

std::vector<double> scaled_powers(bool with_zero) {
  std::vector<double> out;
  if (with_zero) out.push_back(0.0);
  for (int e = -8; e <= 3; ++e) {
    for (double m : {1.0, 2.5, 5.0}) out.push_back(m * std::pow(10.0, e));
  }
  return out;
}

CandidateScore mean_and_error(const std::vector<double>& v) {
  const ScoreSummary s = summarize("", v);
  return {s.mean, s.std_error};
}

void require_validation(const Dataset& val, const Ensemble& model) {
  if (val.empty()) throw InvalidInput("validation set is empty");
  if (val.n_features() != model.n_features())
    throw InvalidInput("validation feature count does not match the model");
}

}  // namespace

std::vector<double> default_gamma_grid() { return scaled_powers(false); }
std::vector<double> default_delta_grid() { return scaled_powers(true); }

CandidateGrids default_grids(std::size_t n_train) {
  CandidateGrids g;
  g.k_grid = default_k_grid(n_train);
  g.gamma_grid = default_gamma_grid();
  g.delta_grid = default_delta_grid();
  g.family_grid = all_families();
  return g;
}

KTuneResult fast_tune_k(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                        const CandidateGrids& grids, std::span<const std::size_t> trees) {
  require_validation(val, model);
  if (grids.k_grid.empty()) throw InvalidInput("k grid is empty");
  for (std::size_t k : grids.k_grid) {
    if (k < 2 || k > index.n_train())
      throw InvalidInput("k grid entry " + std::to_string(k) + " outside [2, n_train]");
  }
  const std::size_t m = val.n_rows();
  const std::size_t g = grids.k_grid.size();
  KTuneResult out;
  out.k_grid = grids.k_grid;
  out.instance_scores.assign(m, std::vector<double>(g));
  out.raw_variances.assign(m, std::vector<double>(g));
  const auto& targets = index.targets();

  parallel_for(m, [&](std::size_t j) {
    const auto x = val.row(j);
    const double mu = model.predict(x);
    const auto order = affinity_order(compute_affinities(x, model, index, trees));
    for (std::size_t c = 0; c < g; ++c) {
      const NeighborSet nb = take_first(order, grids.k_grid[c], targets);
      out.raw_variances[j][c] = sample_variance(nb.targets);
      const double sigma2 = calibrate_variance(raw_variance(nb, kDefaultMinVariance), 1.0, 0.0);
      const auto dist = fit_distribution(DistributionFamily::kNormal, nb, mu, sigma2);
      out.instance_scores[j][c] = score(grids.metric, dist, val.targets()[j]);
    }
  });

  std::size_t best = 0;
  for (std::size_t c = 0; c < g; ++c) {
    std::vector<double> col(m);
    for (std::size_t j = 0; j < m; ++j) col[j] = out.instance_scores[j][c];
    out.k_scores.push_back(mean_and_error(col));
    if (out.k_scores[c].mean < out.k_scores[best].mean) best = c;
  }
  out.k = grids.k_grid[best];
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const double v = out.raw_variances[j][best];
    if (v > 0.0) rho = std::min(rho, v);
  }
  out.rho = std::isfinite(rho) ? rho : kDefaultMinVariance;
  return out;
}

CalibrationResult tune_calibration(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                                   std::span<const std::size_t> trees, std::size_t k, double rho,
                                   const CandidateGrids& grids) {
  require_validation(val, model);
  CalibrationResult out;
  out.candidates.push_back({1.0, 0.0, {}});
  for (double gamma : grids.gamma_grid) {
    if (!(gamma > 0.0)) throw InvalidInput("gamma grid values must be positive");
    out.candidates.push_back({gamma, 0.0, {}});
  }
  for (double delta : grids.delta_grid) {
    if (!(delta >= 0.0)) throw InvalidInput("delta grid values must be non-negative");
    out.candidates.push_back({1.0, delta, {}});
  }

  const std::size_t m = val.n_rows();
  const std::size_t c_count = out.candidates.size();
  std::vector<std::vector<double>> scores(c_count, std::vector<double>(m));
  parallel_for(m, [&](std::size_t j) {
    const auto x = val.row(j);
    const double mu = model.predict(x);
    const NeighborSet nb = top_k(compute_affinities(x, model, index, trees), k, index.targets());
    const double s2 = raw_variance(nb, rho);
    for (std::size_t c = 0; c < c_count; ++c) {
      const double sigma2 = calibrate_variance(s2, out.candidates[c].gamma, out.candidates[c].delta);
      const auto dist = fit_distribution(DistributionFamily::kNormal, nb, mu, sigma2);
      scores[c][j] = score(grids.metric, dist, val.targets()[j]);
    }
  });
  std::size_t best = 0;
  for (std::size_t c = 0; c < c_count; ++c) {
    out.candidates[c].score = mean_and_error(scores[c]);
    if (out.candidates[c].score.mean < out.candidates[best].score.mean) best = c;
  }
  out.gamma = out.candidates[best].gamma;
  out.delta = out.candidates[best].delta;
  return out;
}

FamilySelection select_family(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                              std::span<const std::size_t> trees, const PosteriorConfig& cfg,
                              std::span<const DistributionFamily> families) {
  require_validation(val, model);
  cfg.validate();
  if (families.empty()) throw InvalidInput("family list is empty");
  const std::size_t m = val.n_rows();
  const std::size_t f_count = families.size();
  constexpr double kFailed = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> nlls(f_count, std::vector<double>(m, kFailed));

  parallel_for(m, [&](std::size_t j) {
    const auto x = val.row(j);
    const double mu = model.predict(x);
    const NeighborSet nb = top_k(compute_affinities(x, model, index, trees), cfg.k, index.targets());
    const double sigma2 = calibrate_variance(raw_variance(nb, cfg.rho), cfg.gamma, cfg.delta);
    for (std::size_t f = 0; f < f_count; ++f) {
      try {
        nlls[f][j] = nll(fit_distribution(families[f], nb, mu, sigma2), val.targets()[j]);
      } catch (const FitError&) {
      }
    }
  });

  FamilySelection out;
  std::ptrdiff_t best = -1;
  for (std::size_t f = 0; f < f_count; ++f) {
    FamilyScore fs{families[f], {}, 0, false};
    std::vector<double> ok;
    for (double v : nlls[f]) {
      if (std::isnan(v)) {
        ++fs.failures;
      } else {
        ok.push_back(v);
      }
    }
    fs.disqualified = ok.empty() || static_cast<double>(fs.failures) > 0.01 * static_cast<double>(m);
    if (!ok.empty()) fs.nll = mean_and_error(ok);
    out.scores.push_back(fs);
    if (!fs.disqualified && (best < 0 || fs.nll.mean < out.scores[best].nll.mean))
      best = static_cast<std::ptrdiff_t>(f);
  }
  if (best < 0) throw FitError("every candidate family failed on the validation set");
  out.family = families[best];
  return out;
}

TuneResult tune(const Dataset& val, const Ensemble& model, const LeafIndex& index,
                std::span<const std::size_t> trees, const CandidateGrids& grids) {
  TuneResult out;
  out.k_tuning = fast_tune_k(val, model, index, grids, trees);
  out.calibration =
      tune_calibration(val, model, index, trees, out.k_tuning.k, out.k_tuning.rho, grids);
  out.config.k = out.k_tuning.k;
  out.config.rho = out.k_tuning.rho;
  out.config.gamma = out.calibration.gamma;
  out.config.delta = out.calibration.delta;
  out.config.family = DistributionFamily::kNormal;
  if (!grids.family_grid.empty()) {
    out.family_selection = select_family(val, model, index, trees, out.config, grids.family_grid);
    out.config.family = out.family_selection.family;
  }
  const auto preds = predict_probabilistic_batch(val, model, index, trees, out.config);
  std::vector<double> nlls(preds.size());
  std::vector<double> crpss(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    nlls[i] = nll(preds[i].dist, val.targets()[i]);
    crpss[i] = crps(preds[i].dist, val.targets()[i]);
  }
  const ScoreSummary sn = summarize("nll", nlls);
  const ScoreSummary sc = summarize("crps", crpss);
  out.validation_nll = {sn.mean, sn.std_error};
  out.validation_crps = {sc.mean, sc.std_error};
  return out;
}

std::string tune_report_json(const TuneResult& result, const CandidateGrids& grids) {
  using nlohmann::json;
  json doc;
  doc["version"] = 1;
  doc["metric"] = std::string(to_string(grids.metric));
  json g;
  g["k"] = grids.k_grid;
  g["gamma"] = grids.gamma_grid;
  g["delta"] = grids.delta_grid;
  json fams = json::array();
  for (auto f : grids.family_grid) fams.push_back(std::string(to_string(f)));
  g["family"] = fams;
  doc["grids"] = g;

  json ks = json::array();
  for (std::size_t c = 0; c < result.k_tuning.k_grid.size(); ++c) {
    ks.push_back({{"k", result.k_tuning.k_grid[c]},
                  {"mean", result.k_tuning.k_scores[c].mean},
                  {"stderr", result.k_tuning.k_scores[c].std_error}});
  }
  doc["k_scores"] = ks;
  json cal = json::array();
  for (const auto& c : result.calibration.candidates) {
    cal.push_back({{"gamma", c.gamma}, {"delta", c.delta}, {"mean", c.score.mean}, {"stderr", c.score.std_error}});
  }
  doc["calibration_scores"] = cal;
  json fs = json::array();
  for (const auto& f : result.family_selection.scores) {
    fs.push_back({{"family", std::string(to_string(f.family))},
                  {"mean_nll", f.nll.mean},
                  {"stderr", f.nll.std_error},
                  {"failures", f.failures},
                  {"disqualified", f.disqualified}});
  }
  doc["family_scores"] = fs;
  doc["chosen"] = {{"k", result.config.k},
                   {"rho", result.config.rho},
                   {"gamma", result.config.gamma},
                   {"delta", result.config.delta},
                   {"family", std::string(to_string(result.config.family))}};
  doc["validation"] = {{"nll", {{"mean", result.validation_nll.mean}, {"stderr", result.validation_nll.std_error}}},
                       {"crps", {{"mean", result.validation_crps.mean}, {"stderr", result.validation_crps.std_error}}}};
  return doc.dump(2);
}

}  // namespace ibug
