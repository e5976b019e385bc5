#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kfmse {

/// Base class of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation requiring a square matrix received a rectangular one.
struct NonSquare : Error {
  using Error::Error;
};

/// Matrix or vector dimensions are inconsistent.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// A Cholesky pivot fell below the positive-definiteness threshold.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

/// A matrix required to be symmetric exceeds the symmetry tolerance.
struct NotSymmetric : Error {
  using Error::Error;
};

/// A reversed-time process noise covariance failed its PSD check.
struct SchurNegative : Error {
  using Error::Error;
};

/// The information sum of the two-filter combination is not positive definite.
struct InformationNotPd : Error {
  using Error::Error;
};

/// Two reports being compared do not have matching shapes.
struct ShapeMismatch : Error {
  using Error::Error;
};

/// A trajectory file has gaps or duplicates in its step index column.
struct NonContiguousIndex : Error {
  using Error::Error;
};

/// A text input could not be parsed; carries the 1-based line number.
struct ParseError : Error {
  ParseError(std::size_t line_number, const std::string& reason)
      : Error("line " + std::to_string(line_number) + ": " + reason),
        line(line_number) {}
  std::size_t line;
};

/// A run configuration is missing fields or holds invalid values.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace kfmse
