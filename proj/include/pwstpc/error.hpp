#pragma once

#include <stdexcept>
#include <string>

namespace pwstpc {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map failure classes onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class CodomainViolation : public Error {
 public:
  using Error::Error;
};

class WidthOverflow : public Error {
 public:
  using Error::Error;
};

class RowAuthFailure : public Error {
 public:
  using Error::Error;
};

class CiphertextOutOfGroup : public Error {
 public:
  using Error::Error;
};

class MagnitudeOverflow : public Error {
 public:
  using Error::Error;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class CircuitMismatch : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace pwstpc
