#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fnf {

// Base of every error the library throws. Callers that only care about
// "bad input" vs "bug" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input. `offset` is a character offset within the line,
// `line` is 1-based when known and 0 otherwise.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t line = 0)
      : Error(format(what, offset, line)), message_(what), offset_(offset), line_(line) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

  ParseError at_line(std::size_t line) const { return ParseError(message_, offset_, line); }

 private:
  static std::string format(const std::string& what, std::size_t offset, std::size_t line) {
    std::string out;
    if (line != 0) out += "line " + std::to_string(line) + ", ";
    out += "offset " + std::to_string(offset) + ": " + what;
    return out;
  }

  std::string message_;
  std::size_t offset_;
  std::size_t line_;
};

class UnknownDeviceError : public Error {
 public:
  explicit UnknownDeviceError(const std::string& device)
      : Error("unknown device '" + device + "'"), device_(device) {}
  const std::string& device() const noexcept { return device_; }

 private:
  std::string device_;
};

// A value, threshold or command outside the device's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Applets that disagree about a device (e.g. one numeric, one discrete trigger).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Event streams that must be time-sorted but are not.
class OrderingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Gateway <-> TA platform exchange went wrong (unmatched command, key collision).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Pearson coefficient requested for a constant vector.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

}  // namespace fnf
