#pragma once

#include <stdexcept>
#include <string>

namespace qip {

/// Coarse failure category; the CLI maps each category onto an exit code.
enum class ErrorKind {
  kValidation,  // malformed input, out-of-range parameter, dimension mismatch
  kNumerical,   // singular / non-convergent linear algebra
  kSynthesis,   // no stabilizing controller could be built
  kSimulation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define QIP_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Kind, what) {}      \
  };

QIP_DEFINE_ERROR(InvalidArgument, ErrorKind::kValidation)
QIP_DEFINE_ERROR(ConfigError, ErrorKind::kValidation)
QIP_DEFINE_ERROR(InvalidDesign, ErrorKind::kValidation)
QIP_DEFINE_ERROR(SingularMatrix, ErrorKind::kNumerical)
QIP_DEFINE_ERROR(NoConvergence, ErrorKind::kNumerical)
QIP_DEFINE_ERROR(SingularMassMatrix, ErrorKind::kNumerical)
QIP_DEFINE_ERROR(NonFiniteDerivative, ErrorKind::kNumerical)
QIP_DEFINE_ERROR(NotStabilizable, ErrorKind::kSynthesis)
QIP_DEFINE_ERROR(Uncontrollable, ErrorKind::kSynthesis)
QIP_DEFINE_ERROR(ZeroDcGain, ErrorKind::kSynthesis)
QIP_DEFINE_ERROR(ZeroReference, ErrorKind::kValidation)

#undef QIP_DEFINE_ERROR

}  // namespace qip
