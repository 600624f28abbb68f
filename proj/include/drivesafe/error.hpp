#pragma once

#include <stdexcept>
#include <string>

namespace drivesafe {

/// Base class of every exception raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the operation's domain (bad id, bad band, empty catalog...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Input too short or otherwise degenerate for the requested computation.
class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

/// Inputs that should describe the same observation period do not.
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

/// Malformed data file (TSV/CSV/JSON) on disk.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Wire frame could not be decoded. `field()` names the offending field.
class DecodeError : public Error {
  public:
    DecodeError(std::string field, const std::string &what)
        : Error("decode error in '" + field + "': " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string &field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// A scenario could not be started (missing replay data, bad manifest).
class ScenarioError : public Error {
  public:
    using Error::Error;
};

/// Session script violates its invariants.
class ScriptError : public Error {
  public:
    using Error::Error;
};

/// A replayed trace has no entry for the requested period.
class EndOfReplay : public Error {
  public:
    using Error::Error;
};

}  // namespace drivesafe
