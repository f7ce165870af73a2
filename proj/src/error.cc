#include "preme/error.h"

namespace preme {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput: return "MalformedInput";
    case ErrorCode::kEmptyTranscript: return "EmptyTranscript";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyGeneration: return "EmptyGeneration";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNumericalOverflow: return "NumericalOverflow";
    case ErrorCode::kInconsistentInputs: return "InconsistentInputs";
    case ErrorCode::kUnknownAspect: return "UnknownAspect";
    case ErrorCode::kUnknownSubject: return "UnknownSubject";
    case ErrorCode::kUnknownQuestion: return "UnknownQuestion";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kConfiguration: return "Configuration";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace preme
