#pragma once

#include <stdexcept>
#include <string>

namespace bmameta {

// Root of every error the library raises. Callers that only need to
// distinguish "our" failures from system ones can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BMAMETA_DEFINE_ERROR(Name)       \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// effect sizes
BMAMETA_DEFINE_ERROR(InvalidTableError);
BMAMETA_DEFINE_ERROR(ZeroCellError);
BMAMETA_DEFINE_ERROR(DegenerateVarianceError);
BMAMETA_DEFINE_ERROR(InvalidEstimateError);

// distributions / priors
BMAMETA_DEFINE_ERROR(DomainError);
BMAMETA_DEFINE_ERROR(PriorParseError);
BMAMETA_DEFINE_ERROR(InvalidPriorError);

// registry
BMAMETA_DEFINE_ERROR(UnknownTopicError);
BMAMETA_DEFINE_ERROR(MissingTauPriorError);
BMAMETA_DEFINE_ERROR(RegistryIntegrityError);

// inference
BMAMETA_DEFINE_ERROR(QuadratureError);
BMAMETA_DEFINE_ERROR(NotConvergedError);
BMAMETA_DEFINE_ERROR(ParameterFixedError);
BMAMETA_DEFINE_ERROR(DegenerateOddsError);
BMAMETA_DEFINE_ERROR(ScaleError);

// fitting
BMAMETA_DEFINE_ERROR(InsufficientDataError);
BMAMETA_DEFINE_ERROR(NonConvergenceError);

// ingestion
BMAMETA_DEFINE_ERROR(ParseError);
BMAMETA_DEFINE_ERROR(MixedSchemaError);

#undef BMAMETA_DEFINE_ERROR

}  // namespace bmameta
