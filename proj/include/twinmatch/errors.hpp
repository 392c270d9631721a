#pragma once

#include <stdexcept>
#include <string>

namespace twinmatch {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad k, empty input, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data does not conform to a file schema or a model invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : DataError(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class GridMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class RaggedLengthError : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class NonFiniteError : public DataError {
 public:
  NonFiniteError(const std::string& what, std::size_t index)
      : DataError(what + " at index " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Estimation failed numerically; currently only a zero k-NN distance.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ZeroDistanceError : public NumericError {
 public:
  ZeroDistanceError() : NumericError("zero k-NN distance") {}
};

}  // namespace twinmatch
