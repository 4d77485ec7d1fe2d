#pragma once

#include <stdexcept>
#include <string>

namespace panelgmm {

// Bad input: unknown names, malformed files or instrument strings, violated preconditions.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical stage could not produce a result (rank deficiency, singular weighting, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Instrument-string syntax error with the byte offset of the offending token.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& message, std::size_t offset)
        : ValidationError(message + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace panelgmm
