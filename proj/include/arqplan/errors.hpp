#pragma once

#include <stdexcept>
#include <string>

namespace arqplan {

// Bad user input: malformed scenario, inconsistent allocation, invalid layout.
// The CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numeric failure: quadrature did not reach tolerance, count overflow.
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace arqplan
