#include "ibug/error.hpp"

namespace ibug {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kUnsupportedModel: return "unsupported-model";
    case ErrorKind::kParseError: return "parse-error";
    case ErrorKind::kFitError: return "fit-error";
    case ErrorKind::kNumericError: return "numeric-error";
    case ErrorKind::kEnvironmentError: return "environment-error";
  }
  return "error";
}

}  // namespace ibug
