#pragma once

#include <optional>
#include <string>

#include "ibug/dataset.hpp"

namespace ibug {

/// Reads a comma-separated file with a header row. Every other column becomes
/// a feature; empty feature cells become kMissing. With no target column the
/// targets are all zero (prediction inputs).
///
/// Throws ParseError (row, column) for unparseable cells and InvalidInput for
/// a missing target value or an unknown target column.
Dataset load_csv(const std::string& path, const std::optional<std::string>& target_column);

Dataset parse_csv(const std::string& text, const std::optional<std::string>& target_column);

/// Writes features then the target column, 17 significant digits.
void write_csv(const std::string& path, const Dataset& data, const std::string& target_name = "target");
std::string to_csv(const Dataset& data, const std::string& target_name = "target");

}  // namespace ibug
