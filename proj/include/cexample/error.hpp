#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cexample {

enum class ErrorKind {
  kInputShape,
  kLabel,
  kEmptyInput,
  kParameter,
  kShape,
  kCorruptDataset,
  kTrainingDiverged,
  kNotFound,
  kCorruptFile,
  kVersion,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInputShape: return "input-shape";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kCorruptDataset: return "corrupt-dataset";
    case ErrorKind::kTrainingDiverged: return "training-diverged";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kCorruptFile: return "corrupt-file";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind()` lets callers branch without
/// parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cexample
