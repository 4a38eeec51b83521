#pragma once

#include <stdexcept>
#include <string>

namespace deltabound {

// Base of every error raised by the library. The CLI maps any Error to exit
// status 1 and UsageError to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DELTABOUND_DEFINE_ERROR(Name)      \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

// oracle
DELTABOUND_DEFINE_ERROR(BudgetExhausted)
DELTABOUND_DEFINE_ERROR(DimensionMismatch)

// models
DELTABOUND_DEFINE_ERROR(MalformedModel)
DELTABOUND_DEFINE_ERROR(SchemaError)
DELTABOUND_DEFINE_ERROR(DegenerateData)
DELTABOUND_DEFINE_ERROR(NegativeFeatures)

// distance evaluation / attack
DELTABOUND_DEFINE_ERROR(ZeroDirection)
DELTABOUND_DEFINE_ERROR(NoBoundaryFound)
DELTABOUND_DEFINE_ERROR(RatioOutOfRange)
DELTABOUND_DEFINE_ERROR(DegenerateResidual)
DELTABOUND_DEFINE_ERROR(InitializationFailed)
DELTABOUND_DEFINE_ERROR(MisclassifiedInput)

// data + harness
DELTABOUND_DEFINE_ERROR(ParseError)
DELTABOUND_DEFINE_ERROR(MissingColumn)
DELTABOUND_DEFINE_ERROR(NoCorrectPredictions)
DELTABOUND_DEFINE_ERROR(EmptyList)
DELTABOUND_DEFINE_ERROR(IoError)

// precondition violations on plain arguments (dim = 0, rho outside (0,1], ...)
DELTABOUND_DEFINE_ERROR(InvalidArgument)

DELTABOUND_DEFINE_ERROR(UsageError)

#undef DELTABOUND_DEFINE_ERROR

}  // namespace deltabound
