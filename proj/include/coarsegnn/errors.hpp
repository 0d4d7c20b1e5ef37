/*******************************************************************************
 * @file:   errors.hpp
 * @brief:  Exception types surfaced to the CLI.
 ******************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace coarsegnn {

/// Input text could not be parsed. The message carries file and line.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string &where, std::size_t line, const std::string &what)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + what), _line(line) {}
  explicit FormatError(const std::string &what) : std::runtime_error(what), _line(0) {}

  [[nodiscard]] std::size_t line() const { return _line; }

private:
  std::size_t _line;
};

/// Input parsed but violates a structural requirement.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace coarsegnn
