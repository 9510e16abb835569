#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pneumodef {

// Root of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based; 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedFaceError : public FormatError {
 public:
  using FormatError::FormatError;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Landmark configuration that cannot determine a transform (coplanar,
// collinear or coincident points).
class DegenerateConfigurationError : public Error {
 public:
  DegenerateConfigurationError(const std::string& what, int rank)
      : Error(what + " (rank " + std::to_string(rank) + ")"), rank_(rank) {}
  int rank() const noexcept { return rank_; }

 private:
  int rank_;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double smallest_pivot)
      : Error(what + " (smallest pivot " + std::to_string(smallest_pivot) + ")"),
        smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

// Landmark placement collapsed two landmarks onto one vertex.
class DegenerateLandmarkError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pneumodef
