#pragma once

#include <stdexcept>
#include <string>

namespace varcrit {

enum class ErrorCode {
  ShapeDoesNotFit,
  EmptyInterior,
  MisalignedField,
  InvalidSpec,
  ExponentOutOfRange,
  OmegaEmpty,
  DeltaNonpositive,
  QOutOfRange,
  NoConvergence,
  NonpositiveInput,
  NoBracket,
  OffsetOutsideBox,
  RadiusTooSmall,
  MissingURegion,
  HypothesisViolated,
  InvalidRadii,
  UnknownParameter,
  InvalidConfig,
  IoError,
};

const char* to_string(ErrorCode code);

/// Library error carrying a stable machine-checkable code plus context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace varcrit
