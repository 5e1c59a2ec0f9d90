#pragma once

#include <stdexcept>
#include <string>

namespace terralabel {

// Base of every exception thrown by the library. Each subclass corresponds to
// one failure category that callers (mostly the CLI) map to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDtypeError : public Error {
 public:
  using Error::Error;
};

class WriteError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration (JSON spec, run config, taxonomy override).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace terralabel
