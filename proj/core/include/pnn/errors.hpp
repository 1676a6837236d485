#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pnn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad option values, impossible shapes, missing files.
struct ConfigError : Error {
  using Error::Error;
};

// Well-formed request, unusable data.
struct DataError : Error {
  using Error::Error;
};

// Malformed input line; carries the 1-based line number.
struct ParseError : DataError {
  ParseError(const std::string& what, std::size_t line_number)
      : DataError(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  std::size_t line;
};

// Non-finite loss or gradient during training.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace pnn
