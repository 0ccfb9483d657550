#pragma once

#include <stdexcept>
#include <string>

namespace iptm {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration / parameter-file problems.
struct ConfigError : Error {
    using Error::Error;
};

// Drive-cycle ingestion.
struct MalformedCsv : Error {
    using Error::Error;
};
struct NonMonotoneTime : Error {
    using Error::Error;
};
struct NegativeSpeed : Error {
    using Error::Error;
};

// Plant-model feasibility.
struct DiscriminantNegative : Error {
    using Error::Error;
};
struct SocOutOfTable : Error {
    using Error::Error;
};
struct InfeasibleSplit : Error {
    using Error::Error;
};
struct NegativeEnginePower : Error {
    using Error::Error;
};

// Solver / simulation.
struct NoFeasibleControl : Error {
    using Error::Error;
};
struct ControllerFailure : Error {
    using Error::Error;
};
struct CycleMismatch : Error {
    using Error::Error;
};

}  // namespace iptm
