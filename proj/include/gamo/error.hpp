#pragma once

#include <stdexcept>
#include <string>

namespace gamo {

// Base of every error the library throws. Callers that only need to report a
// failure can catch this; the subclasses exist for tests and exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its documented domain (ratios, depths, step order...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Two grids that must agree in size do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A numerical computation produced NaN/Inf; the message carries diagnostics.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (camera, cloud, scene, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gamo
