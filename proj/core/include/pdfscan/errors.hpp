#pragma once

#include <stdexcept>

namespace pdfscan {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or stream failure; the message names the path involved.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied data: corpus specs, configs, manifests.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numeric-layer contract breach: shape mismatch, non-finite values,
// empty input where a non-empty one is required.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Training-time failure: degenerate label sets, diverged optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Model-container load failures, split by cause so callers can react.
class CheckpointError : public Error {
 public:
  using Error::Error;
};
class CorruptCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class UnknownArchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace pdfscan
