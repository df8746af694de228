#pragma once

#include <stdexcept>
#include <string>

namespace misspec {

#define MISSPEC_DEFINE_ERROR(NAME)                                   \
  struct NAME : std::runtime_error {                                 \
    explicit NAME(const std::string& what)                           \
        : std::runtime_error(std::string(#NAME ": ") + what) {}      \
  };

MISSPEC_DEFINE_ERROR(SchemaError)
MISSPEC_DEFINE_ERROR(ValidationError)
MISSPEC_DEFINE_ERROR(UnknownAction)
MISSPEC_DEFINE_ERROR(DomainError)
MISSPEC_DEFINE_ERROR(SupportError)
MISSPEC_DEFINE_ERROR(GridMismatch)
MISSPEC_DEFINE_ERROR(NonUniqueMinimizer)
MISSPEC_DEFINE_ERROR(ZeroLikelihood)
MISSPEC_DEFINE_ERROR(NoObservations)
MISSPEC_DEFINE_ERROR(EmptyActionSet)
MISSPEC_DEFINE_ERROR(UnsupportedBeliefReduction)
MISSPEC_DEFINE_ERROR(UnsupportedSize)
MISSPEC_DEFINE_ERROR(NonConvergence)
MISSPEC_DEFINE_ERROR(EmptyHistory)
MISSPEC_DEFINE_ERROR(TooShort)
MISSPEC_DEFINE_ERROR(CoverageError)
MISSPEC_DEFINE_ERROR(StepTooLarge)
MISSPEC_DEFINE_ERROR(NonFiniteState)
MISSPEC_DEFINE_ERROR(ResolutionTooCoarse)
MISSPEC_DEFINE_ERROR(NotAnEquilibrium)
MISSPEC_DEFINE_ERROR(MissingBasin)
MISSPEC_DEFINE_ERROR(IdentifiabilityFailure)
MISSPEC_DEFINE_ERROR(MonotonicityViolation)
MISSPEC_DEFINE_ERROR(UnknownPreset)

#undef MISSPEC_DEFINE_ERROR

}  // namespace misspec
