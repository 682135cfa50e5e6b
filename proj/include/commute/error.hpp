#pragma once

#include <stdexcept>
#include <string>

namespace commute {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown timezone, missing column, bad threshold, missing stage input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a contract (overlapping tracts, id mismatch, constant vector).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or degenerate polygon geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

}  // namespace commute
