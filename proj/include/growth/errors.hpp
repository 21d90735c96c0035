#pragma once

#include <stdexcept>
#include <string>

namespace growth {

// Base for every error raised by the library. The CLI maps these to exit code 1.
class GrowthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

class GridMismatch : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

// Bump scale too small for the grid to resolve.
class ResolutionError : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

// Particle outside, or too close to, the (smoothed) boundary.
class DomainViolation : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

class DegenerateDomain : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

class MonitorTriggered : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

class ConfigError : public GrowthError {
 public:
  using GrowthError::GrowthError;
};

}  // namespace growth
