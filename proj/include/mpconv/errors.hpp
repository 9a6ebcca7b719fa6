#ifndef MPCONV_ERRORS_HPP
#define MPCONV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mpconv {

/// Bad user input: parameter out of range, malformed config, unknown key.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An upper reference fell below its paired lower reference. Modulating such a
/// pair would emit the forbidden all-off leg state.
class DominanceViolation : public ValidationError {
public:
    explicit DominanceViolation(const std::string& msg) : ValidationError(msg) {}
};

/// A gate combination outside the three permitted leg states.
class InvalidLegState : public ValidationError {
public:
    explicit InvalidLegState(const std::string& msg) : ValidationError(msg) {}
};

/// Requested current limit is at or above the RL asymptote and is never crossed.
class UnreachableLimit : public ValidationError {
public:
    explicit UnreachableLimit(const std::string& msg) : ValidationError(msg) {}
};

/// A state variable left its sane envelope mid-run (misconfigured scenario).
/// The CLI maps this to exit code 2.
class NumericDivergence : public std::runtime_error {
public:
    NumericDivergence(double t, const std::string& msg)
        : std::runtime_error(msg), time(t) {}
    double time;
};

}  // namespace mpconv

#endif
