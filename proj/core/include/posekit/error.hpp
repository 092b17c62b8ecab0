#pragma once

#include <stdexcept>
#include <string>

namespace posekit {

// Error categories map to CLI exit codes (see README).
enum class ErrorCode : int {
  config = 2,
  validation = 3,
  geometry = 4,
  training_diverged = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Bad parameters, malformed config files, shape mismatches.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorCode::config, msg) {}
};

// Inputs that violate a documented data contract.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg)
      : Error(ErrorCode::validation, msg) {}
};

class EmptyInputError : public ValidationError {
 public:
  explicit EmptyInputError(const std::string& msg) : ValidationError(msg) {}
};

// Geometric impossibilities: objects behind the camera, degenerate fits.
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& msg)
      : Error(ErrorCode::geometry, msg) {}
};

class DegenerateCorrespondenceError : public GeometryError {
 public:
  explicit DegenerateCorrespondenceError(const std::string& msg)
      : GeometryError(msg) {}
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& msg)
      : Error(ErrorCode::training_diverged, msg), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace posekit
