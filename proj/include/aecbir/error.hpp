#pragma once

#include <stdexcept>
#include <string>

namespace aecbir {

// Base class for every error raised by the library. `what()` carries a
// human-readable message; callers that need to branch use the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace aecbir
