// errors.hpp: Exception types shared by the numerical modules

#pragma once

#include <stdexcept>
#include <string>

namespace fgrlab {

// Raised when an iterative method fails to converge or a numerical contract
// (norm, trace, tolerance) cannot be met. Precondition violations use the
// standard std::invalid_argument / std::domain_error instead.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fgrlab
