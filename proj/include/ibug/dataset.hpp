#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ibug {

/// Missing feature values are stored as a quiet NaN.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Row-major feature matrix plus regression targets.
class Dataset {
 public:
  Dataset() = default;

  /// Throws InvalidInput if the shape is inconsistent or a target is not finite.
  Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> features,
          std::vector<double> targets, std::vector<std::string> feature_names = {});

  std::size_t n_rows() const { return targets_.size(); }
  std::size_t n_features() const { return n_features_; }
  bool empty() const { return targets_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  double at(std::size_t i, std::size_t j) const { return features_[i * n_features_ + j]; }

  const std::vector<double>& features() const { return features_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  /// Rows selected by `ids`, in the given order.
  Dataset subset(std::span<const std::size_t> ids) const;

  /// Same rows restricted to the listed feature columns.
  Dataset select_features(std::span<const std::size_t> columns) const;

 private:
  std::size_t n_features_ = 0;
  std::vector<double> features_;
  std::vector<double> targets_;
  std::vector<std::string> feature_names_;
};

}  // namespace ibug
