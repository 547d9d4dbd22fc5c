#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

// Argument outside the mathematical domain of an operation (m = 0, x outside
// [0,1], equal points where distinct ones are required, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Hypothesis of a stated estimate is not met (e.g. zero relative rotation).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Time or cylinder index beyond the levels built into a schedule.
struct HorizonError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// A construction or file violates the schedule constraints, or a certificate
// was requested from data that cannot support it.
struct ConstraintError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace chaoslab
