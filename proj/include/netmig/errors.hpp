#ifndef NETMIG_ERRORS_HPP
#define NETMIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace netmig {

/// Coarse error category, used by callers (e.g. the CLI) to pick exit codes.
enum class ErrorKind { Input, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// Data ingestion and validation
struct MissingColumnError : InputError { using InputError::InputError; };
struct UnbalancedPanelError : InputError { using InputError::InputError; };
struct NonPositiveDenominatorError : InputError { using InputError::InputError; };
struct ParseError : InputError { using InputError::InputError; };
struct SingleRegionError : InputError { using InputError::InputError; };

// Weights construction
struct CoincidentCoordinatesError : InputError { using InputError::InputError; };
struct UnknownRegionError : InputError { using InputError::InputError; };
struct SelfPairError : InputError { using InputError::InputError; };

// Estimation and testing
struct RankDeficientError : NumericalError { using NumericalError::NumericalError; };
struct DegenerateSampleError : NumericalError { using NumericalError::NumericalError; };
struct DegenerateWeightsError : NumericalError { using NumericalError::NumericalError; };
struct NumericalBreakdownError : NumericalError { using NumericalError::NumericalError; };
struct OptimizerAtBoundaryError : NumericalError { using NumericalError::NumericalError; };
struct DimensionMismatchError : InputError { using InputError::InputError; };
struct SingularSystemError : NumericalError { using NumericalError::NumericalError; };

// Simulation
struct InfeasibleBackSolveError : NumericalError { using NumericalError::NumericalError; };

} // namespace netmig

#endif // NETMIG_ERRORS_HPP
