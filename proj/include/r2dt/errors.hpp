#pragma once

#include <stdexcept>
#include <string>

namespace r2dt {

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Utility or model parameters outside their admissible domain.
class InvalidParams : public Error {
   public:
    using Error::Error;
};

/// Utility normaliser collapses (u(1) == u(0)); the utility cannot rank doses.
class DegenerateUtility : public InvalidParams {
   public:
    using InvalidParams::InvalidParams;
};

class InvalidDoseGrid : public Error {
   public:
    using Error::Error;
};

class InvalidCohort : public Error {
   public:
    using Error::Error;
};

class InvalidConfig : public Error {
   public:
    using Error::Error;
};

/// Sampler failed its post-adaptation acceptance-rate gate.
class McmcDiagnosticError : public Error {
   public:
    using Error::Error;
};

/// Elicitation answer that contradicts the question or earlier answers.
class InconsistentAnswer : public Error {
   public:
    using Error::Error;
};

/// Elicitation answer that no member of the power family reproduces.
class OutOfFamily : public InconsistentAnswer {
   public:
    using InconsistentAnswer::InconsistentAnswer;
};

/// Two indifference pairs that do not pin down both joint weights.
class UninformativePairs : public InconsistentAnswer {
   public:
    using InconsistentAnswer::InconsistentAnswer;
};

/// Operation attempted in the wrong session/trial phase.
class OutOfOrder : public Error {
   public:
    using Error::Error;
};

}  // namespace r2dt
