#pragma once

#include <stdexcept>
#include <string>

namespace curvepat {

// Every failure the library reports derives from Error, so callers can map
// operational problems to a single exit path.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

#define CURVEPAT_ERROR(Name)                                         \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(what) {}          \
    const char* kind() const noexcept override { return #Name; }     \
  };

CURVEPAT_ERROR(ConstantTermError)
CURVEPAT_ERROR(ZeroPolynomialError)
CURVEPAT_ERROR(DegenerateCurveError)
CURVEPAT_ERROR(CalibrationFailed)
CURVEPAT_ERROR(ResolutionError)
CURVEPAT_ERROR(NyquistError)
CURVEPAT_ERROR(DimensionError)
CURVEPAT_ERROR(QuadratureError)
CURVEPAT_ERROR(HypothesisError)
CURVEPAT_ERROR(ShellError)
CURVEPAT_ERROR(SubstitutionError)
CURVEPAT_ERROR(ScheduleError)
CURVEPAT_ERROR(BudgetExceeded)
CURVEPAT_ERROR(NoWitnessFound)
CURVEPAT_ERROR(RoundingError)
CURVEPAT_ERROR(NoSliceFound)
CURVEPAT_ERROR(DispatchError)
CURVEPAT_ERROR(PreconditionError)
CURVEPAT_ERROR(IoError)
CURVEPAT_ERROR(ConfigError)

#undef CURVEPAT_ERROR

}  // namespace curvepat
