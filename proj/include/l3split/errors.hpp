#pragma once

#include <stdexcept>
#include <string>

namespace l3split {

// base for every numerical failure (CLI exit code 2)
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepSizeUnderflow : NumericsError {
    using NumericsError::NumericsError;
};
struct NonFiniteRhs : NumericsError {
    using NumericsError::NumericsError;
};
struct NoCrossing : NumericsError {
    using NumericsError::NumericsError;
};
struct BracketError : NumericsError {
    using NumericsError::NumericsError;
};
struct QuadratureError : NumericsError {
    using NumericsError::NumericsError;
};
struct CollisionError : NumericsError {
    using NumericsError::NumericsError;
};
struct NonEllipticError : NumericsError {
    using NumericsError::NumericsError;
};
struct DomainError : NumericsError {
    using NumericsError::NumericsError;
};

} // namespace l3split
