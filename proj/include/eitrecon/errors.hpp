#pragma once

#include <stdexcept>
#include <string>

namespace eitrecon {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mesh construction or mesh file problems.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Pixel graph problems (e.g. an ROI that cannot be reached from Gamma).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Conductivity model that does not define a well-posed forward problem.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Boundary basis cannot be resolved on the given mesh.
class BasisError : public Error {
 public:
  using Error::Error;
};

/// Measured data inconsistent with the requested computation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failed (factorization, eigensolve).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace eitrecon
