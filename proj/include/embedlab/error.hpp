#pragma once

#include <stdexcept>
#include <string>

namespace embedlab {

// Runtime failure inside the pipeline (bad input file, invalid shapes, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record in an input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace embedlab
