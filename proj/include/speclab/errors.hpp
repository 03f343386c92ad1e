#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

/// Base class for every error raised by the library. `code()` is a stable
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define SPECLAB_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

// geometry
SPECLAB_DEFINE_ERROR(InvalidParameter)
SPECLAB_DEFINE_ERROR(ConvexityViolation)
SPECLAB_DEFINE_ERROR(NonPositiveSupport)

// special functions / spectra
SPECLAB_DEFINE_ERROR(ConvergenceFailure)
SPECLAB_DEFINE_ERROR(DomainMismatch)

// collocation solver
SPECLAB_DEFINE_ERROR(IllConditioned)
SPECLAB_DEFINE_ERROR(MissedEigenvalueSuspected)
SPECLAB_DEFINE_ERROR(NormalizationFailure)

// boundary functionals
SPECLAB_DEFINE_ERROR(NegativeDensity)
SPECLAB_DEFINE_ERROR(GridMismatch)
SPECLAB_DEFINE_ERROR(MeanNotZero)
SPECLAB_DEFINE_ERROR(DegenerateWeight)
SPECLAB_DEFINE_ERROR(SpectrumTooShort)

// packets
SPECLAB_DEFINE_ERROR(DegenerateFit)

// harness
SPECLAB_DEFINE_ERROR(ConfigError)
SPECLAB_DEFINE_ERROR(MissingArtifact)

#undef SPECLAB_DEFINE_ERROR

}  // namespace speclab
