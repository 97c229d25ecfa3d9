#pragma once

#include <stdexcept>
#include <string>

namespace lqg {

// Input outside the domain where a construction is defined.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Root finders, integrators or tracers that failed to converge.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Estimator refused to run on too few (effective) samples.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Law requested for parameters without a closed form.
struct NoClosedFormError : std::domain_error {
    using std::domain_error::domain_error;
};

// Law requested in a regime where the measure is not normalizable.
struct NonNormalizableError : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace lqg
