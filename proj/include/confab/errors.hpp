#pragma once

#include <stdexcept>
#include <string>

namespace confab {

// Caller-supplied data violates an operation's contract.
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fit or estimate has too few samples to proceed.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical routine failed (factorization, non-convergence, non-finite values).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization diverged; carries step and loss diagnostics in the message.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace confab
