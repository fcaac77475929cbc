#pragma once

#include <string>
#include <string_view>

#include "ibug/ensemble.hpp"

namespace ibug {

enum class DumpFormat { kLightGbmText, kXgboostJson, kNativeJson };

/// Accepts "lightgbm-text", "xgboost-json" and "native-json".
DumpFormat parse_dump_format(std::string_view tag);
std::string_view to_string(DumpFormat format);

/// Builds an Ensemble that reproduces the source library's raw scores.
/// External dumps already hold shrunken leaf values, so they load with
/// learning_rate = 1.
Ensemble parse_model(std::string_view bytes, DumpFormat format);

Ensemble parse_lightgbm_text(std::string_view text);
Ensemble parse_xgboost_json(std::string_view text);
Ensemble parse_native_json(std::string_view text);

/// Versioned native JSON document, nodes in pre-order.
std::string to_native_json(const Ensemble& model);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace ibug
