#pragma once

#include <stdexcept>
#include <string>

namespace downclose {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A word, automaton or grammar refers to a letter its alphabet does not have,
// or two objects that must share an alphabet do not.
class AlphabetMismatch : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Structurally malformed input (e.g. a zero test handed to a simple OCA).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed text or JSON.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A configured size cap was hit; results are never silently truncated.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

}  // namespace downclose
