#include "hlab/error.hpp"

namespace hlab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FeatureUnresolved: return "FeatureUnresolved";
    case ErrorCode::EmptyGamma: return "EmptyGamma";
    case ErrorCode::RegionMismatch: return "RegionMismatch";
    case ErrorCode::UnderResolved: return "UnderResolved";
    case ErrorCode::NearResonance: return "NearResonance";
    case ErrorCode::SolverBreakdown: return "SolverBreakdown";
    case ErrorCode::NotASolution: return "NotASolution";
    case ErrorCode::AssumptionIViolated: return "AssumptionIViolated";
    case ErrorCode::SpectrumTooShort: return "SpectrumTooShort";
    case ErrorCode::GramNotSPD: return "GramNotSPD";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::InsufficientAdmissibleK: return "InsufficientAdmissibleK";
    case ErrorCode::GeometryViolation: return "GeometryViolation";
    case ErrorCode::DegenerateSamples: return "DegenerateSamples";
    case ErrorCode::ChainBlocked: return "ChainBlocked";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::RangeGuard: return "RangeGuard";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::AgreementViolation: return "AgreementViolation";
    case ErrorCode::SupportTouchesBox: return "SupportTouchesBox";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hlab
