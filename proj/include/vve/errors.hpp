#pragma once
/// @file errors.hpp
/// @brief Error taxonomy shared by every module of the library.
///
/// All failures surface as a vve::Error carrying a machine-readable kind and
/// a human-readable message that names the violated constraint.  Warnings
/// (non-fatal guard trips) are collected separately as strings, see
/// vve::GuardTrips in integrate.hpp.

#include <stdexcept>
#include <string>

namespace vve {

enum class ErrorKind {
  ConfigError,         ///< invalid or inconsistent configuration input
  DegenerateMap,       ///< det(grad eta) fell below the positivity floor
  NonConvergedGhost,   ///< slip-wall tangential solve failed to converge
  ProjectionFailed,    ///< compatibility projection could not reach tolerance
  ImplicitSolveFailed, ///< IMEX viscous fixed point exceeded its iteration cap
  SingularRecovery,    ///< normal-derivative recovery matrix is ill-conditioned
  InsufficientHistory, ///< time-derivative stencil requested more snapshots than held
  NonPositiveValue,    ///< log-log rate fit received a non-positive value
  DtViolation,         ///< supplied time step exceeds the stability bound
  IoError,             ///< file or stream operation failed
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DegenerateMap: return "DegenerateMap";
    case ErrorKind::NonConvergedGhost: return "NonConvergedGhost";
    case ErrorKind::ProjectionFailed: return "ProjectionFailed";
    case ErrorKind::ImplicitSolveFailed: return "ImplicitSolveFailed";
    case ErrorKind::SingularRecovery: return "SingularRecovery";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::NonPositiveValue: return "NonPositiveValue";
    case ErrorKind::DtViolation: return "DtViolation";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace vve
