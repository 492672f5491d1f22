#include "xgen/error.hpp"

namespace xgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kInvalidSample: return "InvalidSample";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kSingleClassData: return "SingleClassData";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kKeyMismatch: return "KeyMismatch";
    case ErrorCode::kUnknownGenerator: return "UnknownGenerator";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::kUnknownContext: return "UnknownContext";
    case ErrorCode::kInconsistentUniverse: return "InconsistentUniverse";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kDigestMismatch: return "DigestMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kDigestMismatch:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

}  // namespace xgen
