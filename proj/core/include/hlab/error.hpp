#pragma once

#include <stdexcept>
#include <string>

namespace hlab {

enum class ErrorCode {
  InvalidArgument,
  FeatureUnresolved,
  EmptyGamma,
  RegionMismatch,
  UnderResolved,
  NearResonance,
  SolverBreakdown,
  NotASolution,
  AssumptionIViolated,
  SpectrumTooShort,
  GramNotSPD,
  TargetUnreachable,
  InsufficientAdmissibleK,
  GeometryViolation,
  DegenerateSamples,
  ChainBlocked,
  SupportViolation,
  HypothesisViolated,
  RangeGuard,
  ContextMismatch,
  AgreementViolation,
  SupportTouchesBox,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace hlab
