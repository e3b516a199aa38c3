#pragma once

#include <stdexcept>
#include <string>

namespace rarefit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain invariant (theta range, type code, duplicates).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file or document does not conform to its schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

class InsufficientCorrespondence : public Error {
 public:
  using Error::Error;
};

/// The least-squares design is rank deficient (e.g. collinear latent points).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A genuine/impostor split has no members on one side.
class EmptyClass : public Error {
 public:
  using Error::Error;
};

}  // namespace rarefit
