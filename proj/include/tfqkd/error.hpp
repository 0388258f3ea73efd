#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tfqkd {

// Stable error classes. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kDomain = 2,
  kStructural = 3,
  kSolver = 4,
  kDataIntegrity = 5,
  kEstimation = 6,
  kConfig = 7,
  kIo = 8,
};

constexpr std::string_view error_class_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kStructural: return "structural";
    case ErrorCode::kSolver: return "solver";
    case ErrorCode::kDataIntegrity: return "data_integrity";
    case ErrorCode::kEstimation: return "estimation";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

class DomainError : public Error {
 public:
  DomainError(std::string module, const std::string& message)
      : Error(ErrorCode::kDomain, std::move(module), message) {}
};

class StructuralError : public Error {
 public:
  StructuralError(std::string module, const std::string& message)
      : Error(ErrorCode::kStructural, std::move(module), message) {}
};

class SolverError : public Error {
 public:
  SolverError(std::string module, const std::string& message)
      : Error(ErrorCode::kSolver, std::move(module), message) {}
};

class DataIntegrityError : public Error {
 public:
  DataIntegrityError(std::string module, const std::string& message)
      : Error(ErrorCode::kDataIntegrity, std::move(module), message) {}
};

class EstimationError : public Error {
 public:
  EstimationError(std::string module, const std::string& message)
      : Error(ErrorCode::kEstimation, std::move(module), message) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& message)
      : Error(ErrorCode::kConfig, std::move(module), message) {}
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& message)
      : Error(ErrorCode::kIo, std::move(module), message) {}
};

}  // namespace tfqkd
