#include "hcmu/errors.hpp"

namespace hcmu {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RejectedParams: return "RejectedParams";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::UmbilicReached: return "UmbilicReached";
    case ErrorKind::ThetaSaturation: return "ThetaSaturation";
    case ErrorKind::DenominatorSingular: return "DenominatorSingular";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::MetricShapeMismatch: return "MetricShapeMismatch";
    case ErrorKind::StencilOutOfRange: return "StencilOutOfRange";
    case ErrorKind::ConstraintBlowup: return "ConstraintBlowup";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::UnsupportedModel: return "UnsupportedModel";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      line_(line) {}

}  // namespace hcmu
