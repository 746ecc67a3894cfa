#pragma once

#include <stdexcept>
#include <string>

namespace pdc {

// Raised when a computation is well-posed but fails numerically: an iterative
// solver that did not converge, a normalisation that vanished.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pdc
