#pragma once

#include <stdexcept>
#include <string>

namespace cpi {

/// Invalid configuration or domain input. `field()` names the offending
/// parameter when one can be identified.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A grid violates the Fresnel-kernel Nyquist bound.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Refocusing samples fall outside the detector grid too often.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpi
