#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnndc {

// Tensor or layer dimensions that do not compose.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (hyperparameters, sampling ratios, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, written or decoded.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text input with a malformed line. line() is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Synthetic scene could not be built from the requested configuration.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric is undefined for the given counts (no ground truth, no detections).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace cnndc
