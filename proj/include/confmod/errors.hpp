#pragma once

#include <stdexcept>
#include <string>

namespace confmod {

/// Raised for malformed input: degenerate boxes, bad arcs, bad configs.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iteration fails to converge or a map cannot be inverted.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace confmod
