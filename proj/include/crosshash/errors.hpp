// errors.hpp — exception types the CLI maps onto distinct exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace crosshash {

// File missing, malformed, or unwritable.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Training objective became non-finite or blew past the guard threshold.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crosshash
