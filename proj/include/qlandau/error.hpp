/**
 * \file error.hpp
 * \brief Error kinds raised by the library.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qlandau {

enum class ErrorKind {
  DomainError,
  InvalidCombination,
  GaugeUndefined,
  InvalidRestriction,
  SingularityReached,
  StepSizeUnderflow,
  UnboundMotion,
  NotReducible,
  ComplexRoots,
  NoBoundMotion,
  ForbiddenRegion,
  DivergentIntegral,
  Nonconvergent,
  SchemaMismatch,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidCombination: return "InvalidCombination";
    case ErrorKind::GaugeUndefined: return "GaugeUndefined";
    case ErrorKind::InvalidRestriction: return "InvalidRestriction";
    case ErrorKind::SingularityReached: return "SingularityReached";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::UnboundMotion: return "UnboundMotion";
    case ErrorKind::NotReducible: return "NotReducible";
    case ErrorKind::ComplexRoots: return "ComplexRoots";
    case ErrorKind::NoBoundMotion: return "NoBoundMotion";
    case ErrorKind::ForbiddenRegion: return "ForbiddenRegion";
    case ErrorKind::DivergentIntegral: return "DivergentIntegral";
    case ErrorKind::Nonconvergent: return "Nonconvergent";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Base exception; every library failure carries a kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace qlandau
