#include "ibug/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "ibug/error.hpp"
#include "ibug/model_io.hpp"

namespace ibug {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cells;
}

std::string format_double(double v) {
  if (is_missing(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::optional<std::string>& target_column) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("CSV file is empty", 1, 0);

  const auto header = split_line(lines[0]);
  std::ptrdiff_t target = -1;
  if (target_column) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == *target_column) target = static_cast<std::ptrdiff_t>(c);
    }
    if (target < 0) {
      // A purely numeric name selects a column by position.
      char* end = nullptr;
      const long idx = std::strtol(target_column->c_str(), &end, 10);
      if (!target_column->empty() && *end == '\0' && idx >= 0 && static_cast<std::size_t>(idx) < header.size())
        target = idx;
    }
    if (target < 0) throw InvalidInput("target column '" + *target_column + "' not found in header");
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) != target) names.push_back(header[c]);
  }
  if (names.empty()) throw InvalidInput("CSV has no feature columns");

  std::vector<double> x;
  std::vector<double> y;
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split_line(lines[li]);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       li + 1, 0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const bool is_target = static_cast<std::ptrdiff_t>(c) == target;
      double v = kMissing;
      if (!cells[c].empty()) {
        char* end = nullptr;
        errno = 0;
        v = std::strtod(cells[c].c_str(), &end);
        if (*end != '\0') throw ParseError("cannot parse '" + cells[c] + "' as a number", li + 1, c + 1);
      }
      if (is_target) {
        if (!std::isfinite(v))
          throw InvalidInput("missing or non-finite target at row " + std::to_string(li + 1));
        y.push_back(v);
      } else {
        x.push_back(v);
      }
    }
    if (target < 0) y.push_back(0.0);
    ++rows;
  }
  if (rows == 0) throw InvalidInput("CSV has a header but no data rows");
  const std::size_t n_features = names.size();
  return Dataset(rows, n_features, std::move(x), std::move(y), std::move(names));
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& target_column) {
  return parse_csv(read_file(path), target_column);
}

std::string to_csv(const Dataset& data, const std::string& target_name) {
  std::string out;
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    out += data.feature_names().empty() ? "x" + std::to_string(j) : data.feature_names()[j];
    out += ',';
  }
  out += target_name + '\n';
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      out += format_double(data.at(i, j));
      out += ',';
    }
    out += format_double(data.targets()[i]) + '\n';
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& data, const std::string& target_name) {
  write_file(path, to_csv(data, target_name));
}

}  // namespace ibug
