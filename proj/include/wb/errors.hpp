#pragma once

#include <stdexcept>
#include <string>

namespace wb {

// Bad arguments or violated preconditions.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite values encountered mid-computation.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ULA step size outside the regime where a limiting law exists,
// or an analytic bound is inapplicable.
struct StepSizeTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Laplace approximation did not produce a valid Gaussian.
struct ApproximationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wb
