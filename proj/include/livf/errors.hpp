#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace livf {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operands disagree on dimensionality (vector vs vector, query vs index, ...).
struct DimensionError : Error {
  using Error::Error;
};

// An input is degenerate for the requested operation, e.g. a zero vector
// where a direction is required.
struct DegenerateInputError : Error {
  using Error::Error;
};

// An input that must lie on the unit sphere does not.
struct NonUnitNormError : Error {
  using Error::Error;
};

// A parameter is out of range or inconsistent with the data it applies to.
struct InvalidParamError : Error {
  using Error::Error;
};

// A clustering does not partition the ids it claims to cover.
struct InconsistentClusteringError : Error {
  using Error::Error;
};

// A relevance label violates the active mode's contract (e.g. not one-hot).
struct InvalidLabelError : Error {
  using Error::Error;
};

// A non-finite value surfaced where the computation requires finite ones.
struct NumericError : Error {
  using Error::Error;
};

// A file could not be opened, read or written; the message names the path.
struct IoError : Error {
  using Error::Error;
};

// A file's bytes do not match its format; `offset` is where parsing failed.
struct FormatError : Error {
  FormatError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " at byte offset " + std::to_string(byte_offset)),
        offset(byte_offset) {}

  std::size_t offset = 0;
};

}  // namespace livf
