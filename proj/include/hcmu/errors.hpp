#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hcmu {

enum class ErrorKind {
  RejectedParams,
  DegenerateMetric,
  ConvergenceFailure,
  UmbilicReached,
  ThetaSaturation,
  DenominatorSingular,
  DomainError,
  MetricShapeMismatch,
  StencilOutOfRange,
  ConstraintBlowup,
  FormatError,
  UnsupportedModel,
  ConfigError,
  EmptyInput,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// The single exception type thrown by the library. `kind()` is stable and
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }

  /// Set for FormatError raised while parsing a file (1-based).
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace hcmu
