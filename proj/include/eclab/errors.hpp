#pragma once

#include <stdexcept>
#include <string>

namespace eclab {

// Base of everything the library throws on a broken contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
  using Error::Error;
};
class ParameterError : public Error {
  using Error::Error;
};
class ContourError : public Error {
  using Error::Error;
};
class NotFoundError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};
class DegenerateMapError : public Error {
  using Error::Error;
};
class ApproximationFailure : public Error {
  using Error::Error;
};
class LatticeMismatch : public Error {
  using Error::Error;
};
// A sweep ran out of room before the thresholds were met.
class ThresholdUnmet : public Error {
  using Error::Error;
};

}  // namespace eclab
