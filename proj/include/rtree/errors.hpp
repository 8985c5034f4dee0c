#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtree {

// Base of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument is non-positive, out of range, or otherwise inadmissible.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A PointLocation or interval does not lie inside the tree.
class LocationError : public Error {
 public:
  using Error::Error;
};

// Bad command line or configuration: unknown key, missing value, unknown command or suite.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed sequence spec string (grammar-level, not numeric).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input file. `row` is 1-based, 0 when not row-specific.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t row = 0);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Filesystem failure (unreadable input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

// An n = infinity request whose tail budget cannot reach the tolerance under the index cap.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rtree
