#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clickscale {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (lengths, ranges, N >= 2, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Malformed input file content. line() is 1-based, 0 when not line-oriented.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Action DSL / protocol parse failure. position() is a 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EnvError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

class GroundingError : public Error {
 public:
  using Error::Error;
};

}  // namespace clickscale
