#include "ibug/dataset.hpp"

#include "ibug/error.hpp"

namespace ibug {

Dataset::Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features,
                 std::vector<double> targets, std::vector<std::string> feature_names)
    : n_features_(n_features),
      features_(std::move(features)),
      targets_(std::move(targets)),
      feature_names_(std::move(feature_names)) {
  if (n_rows == 0) throw InvalidInput("dataset has no rows");
  if (n_features == 0) throw InvalidInput("dataset has no features");
  if (targets_.size() != n_rows) throw InvalidInput("target count does not match row count");
  if (features_.size() != n_rows * n_features)
    throw InvalidInput("feature matrix size does not match n_rows x n_features");
  if (!feature_names_.empty() && feature_names_.size() != n_features)
    throw InvalidInput("feature name count does not match feature count");
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (!std::isfinite(targets_[i]))
      throw InvalidInput("non-finite target at row " + std::to_string(i));
  }
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(ids.size() * n_features_);
  y.reserve(ids.size());
  for (std::size_t id : ids) {
    if (id >= n_rows()) throw InvalidInput("row id out of range");
    auto r = row(id);
    x.insert(x.end(), r.begin(), r.end());
    y.push_back(targets_[id]);
  }
  return Dataset(ids.size(), n_features_, std::move(x), std::move(y), feature_names_);
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
  std::vector<double> x;
  x.reserve(n_rows() * columns.size());
  std::vector<std::string> names;
  for (std::size_t c : columns) {
    if (c >= n_features_) throw InvalidInput("feature column out of range");
    if (!feature_names_.empty()) names.push_back(feature_names_[c]);
  }
  for (std::size_t i = 0; i < n_rows(); ++i) {
    for (std::size_t c : columns) x.push_back(at(i, c));
  }
  return Dataset(n_rows(), columns.size(), std::move(x), targets_, std::move(names));
}

}  // namespace ibug
