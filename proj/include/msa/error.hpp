#pragma once

#include <stdexcept>
#include <string>

namespace msa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file content (carries a line number where known).
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  std::size_t line;
};

// Structurally well-formed input that violates a corpus/model invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Caller passed an out-of-range or inconsistent argument.
struct ArgumentError : Error {
  using Error::Error;
};

// Operation requires state that has not been established yet.
struct StateError : Error {
  using Error::Error;
};

// Model fitting could not proceed or diverged.
struct TrainError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace msa
