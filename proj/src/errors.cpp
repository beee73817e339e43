#include "msgpass/errors.hpp"

namespace msgpass {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonpositivePrecision: return "NonpositivePrecision";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::ZeroModulusSymbol: return "ZeroModulusSymbol";
    case ErrorCode::DegenerateSymbolBelief: return "DegenerateSymbolBelief";
    case ErrorCode::BothFlat: return "BothFlat";
    case ErrorCode::AllZeroLikelihood: return "AllZeroLikelihood";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace msgpass
