#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vibcnn {

// Tensor dimension disagreement between operands.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value: bad probability, split ratio, layer geometry,
// out-of-range label, unknown config key, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened/read/written at the OS level.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed binary file. `offset` is the byte position of the problem.
struct FormatError : std::runtime_error {
  FormatError(const std::string& msg, std::uint64_t offset_)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset_) + ")"),
        offset(offset_) {}
  std::uint64_t offset;
};

// Malformed text input. `row` is 1-based.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::uint64_t row_)
      : std::runtime_error(msg + " (row " + std::to_string(row_) + ")"), row(row_) {}
  std::uint64_t row;
};

// Non-finite value where training cannot continue.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vibcnn
