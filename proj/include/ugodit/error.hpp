#pragma once

#include <stdexcept>
#include <string>

namespace ugodit {

// Base of every error raised by the library. Subclasses name the failure
// category so callers (and the CLI) can report it precisely.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Caller violated a shape or usage precondition.
class ContractError : public Error {
public:
  using Error::Error;
};

// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Parameters were built for a different network architecture.
class ArchitectureError : public Error {
public:
  using Error::Error;
};

// Optimization produced a non-finite loss.
class DivergenceError : public Error {
public:
  using Error::Error;
};

// On-disk data has the wrong magic or layout.
class FormatError : public Error {
public:
  using Error::Error;
};

// On-disk data was written by a newer format version.
class VersionError : public Error {
public:
  using Error::Error;
};

// Stored fingerprint disagrees with the embedded architecture.
class IntegrityError : public Error {
public:
  using Error::Error;
};

// Stored arrays contain non-finite values.
class CorruptionError : public Error {
public:
  using Error::Error;
};

// Missing or unreadable user input (files, directories).
class InputError : public Error {
public:
  using Error::Error;
};

// A ratio whose denominator vanished.
class UndefinedRatioError : public Error {
public:
  using Error::Error;
};

inline void require(bool cond, const std::string &what) {
  if (!cond)
    throw ContractError(what);
}

} // namespace ugodit
