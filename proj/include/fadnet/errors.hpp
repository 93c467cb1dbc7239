#pragma once

#include <stdexcept>
#include <string>

namespace fadnet {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not conform (mismatched extents, bad kernel geometry, ...).
struct ShapeError : Error {
  using Error::Error;
};

// Reduction or index axis outside the tensor rank.
struct AxisError : Error {
  using Error::Error;
};

// Invalid network / schedule / CLI configuration.
struct ConfigError : Error {
  using Error::Error;
};

// API contract violation (e.g. backward on a non-scalar loss).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed file payload; message carries a byte offset where known.
struct FormatError : Error {
  using Error::Error;
};

// Sample unusable for the requested computation (e.g. empty validity mask).
struct DegenerateError : Error {
  using Error::Error;
};

// Training aborted (divergence); message carries epoch and sample index.
struct TrainingError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace fadnet
