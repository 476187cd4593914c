#pragma once

#include <stdexcept>
#include <string>

namespace tdm {

// Bad input data or configuration (CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, long line = 0)
        : ValidationError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    long line() const { return line_; }

private:
    long line_;
};

// Non-finite values reached the numeric core (CLI exit code 3).
class NumericalFault : public std::runtime_error {
public:
    explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tdm
