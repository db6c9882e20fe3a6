#pragma once

#include <stdexcept>
#include <string>

namespace gami {

// Error categories. The CLI maps each to a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing input data: unparsable CSV, non-finite cell, missing column.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model document that cannot be read: version mismatch, missing field.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

// A linear system could not be solved or a derivative became non-finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Caller violated an argument precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace gami
