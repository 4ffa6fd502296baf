#pragma once

#include <stdexcept>
#include <string>

namespace dfsel {

// Input text could not be parsed. `line` is 1-based; 0 means "not tied to a line".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, long line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes or layouts do not match what the operation requires.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace dfsel
