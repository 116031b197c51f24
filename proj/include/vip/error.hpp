#pragma once

#include <stdexcept>
#include <string>

namespace vip {

/// Base of every error raised by the library. The CLI catches this and
/// prints what() as its one-line diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions or channel counts do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, kind, or architecture header in a file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File ended before the payload its header promised.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Unknown key, malformed value, or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when an iterative process leaves the numerically sane region
/// (NaN loss during training, exploding state during reconstruction).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vip
