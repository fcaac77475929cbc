#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ibug {

enum class ErrorKind {
  kInvalidInput,
  kUnsupportedModel,
  kParseError,
  kFitError,
  kNumericError,
  kEnvironmentError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::kInvalidInput, what) {}
};

class UnsupportedModel : public Error {
 public:
  explicit UnsupportedModel(const std::string& what)
      : Error(ErrorKind::kUnsupportedModel, what) {}
};

// Carries the position of the offending input. `line` is 1-based; `offset`
// is a byte offset, a column, or 0 when not meaningful.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset)
      : Error(ErrorKind::kParseError, what + " (line " + std::to_string(line) +
                                          ", offset " + std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what, std::vector<double> last_iterate = {})
      : Error(ErrorKind::kFitError, what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumericError, what) {}
};

}  // namespace ibug
