#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evosynth {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (m, chi, alphas, R, trainer settings...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Parents whose tag spaces or strength lists cannot be aligned.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Ancestor genome with an empty layer/cluster or dead synapses.
class MalformedAncestorError : public Error {
 public:
  using Error::Error;
};

// Genome does not match the network architecture it is materialized into.
class SpecError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Empty or otherwise unusable datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed IDX payloads; carries the byte offset where parsing failed.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Malformed metrics CSV; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// An internal invariant was broken; indicates a bug, not bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace evosynth
