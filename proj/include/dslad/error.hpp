#pragma once

#include <stdexcept>
#include <string>

namespace dslad {

// Base class for all toolkit errors. The CLI maps ConfigError to exit
// code 1 and every other Error to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};
struct BoundsError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct StateError : Error {
  using Error::Error;
};
struct EvalError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace dslad
