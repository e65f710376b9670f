#pragma once

#include <stdexcept>
#include <string>

namespace phaseforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operands with incompatible shapes.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration value (out-of-range hyperparameter, bad spec string).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A solver produced a non-finite value or failed to converge.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed binary or text file. `kind()` distinguishes the failure classes
/// callers need to react to differently.
class ParseError : public Error {
public:
  enum class Kind {
    io,
    unsupported_format,
    malformed_header,
    truncated,
    unsupported_maxval,
    bad_magic,
    version_mismatch,
    channel_chain_mismatch,
    bias_record,
  };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

}  // namespace phaseforge
