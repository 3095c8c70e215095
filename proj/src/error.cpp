#include "uniemb/error.hpp"

namespace uniemb {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotSquare: return "NotSquare";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kRankOutOfRange: return "RankOutOfRange";
    case ErrorCode::kNegativeEigenvalueInRange: return "NegativeEigenvalueInRange";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kClassSetMismatch: return "ClassSetMismatch";
    case ErrorCode::kBothWeightsZero: return "BothWeightsZero";
    case ErrorCode::kNonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::kMissingEmbeddingForRoutedEncoder:
      return "MissingEmbeddingForRoutedEncoder";
    case ErrorCode::kEncoderNotInFusion: return "EncoderNotInFusion";
    case ErrorCode::kUnknownUtteranceId: return "UnknownUtteranceId";
    case ErrorCode::kDurationMismatch: return "DurationMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kSingleClassOnly: return "SingleClassOnly";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kDuplicateUtteranceId: return "DuplicateUtteranceId";
    case ErrorCode::kInconsistentDim: return "InconsistentDim";
    case ErrorCode::kTrailingData: return "TrailingData";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

static std::string Decorate(ErrorCode code, const std::string &what,
                            std::optional<std::size_t> line) {
  std::string msg(ErrorCodeName(code));
  if (line) msg += " (line " + std::to_string(*line) + ")";
  msg += ": ";
  msg += what;
  return msg;
}

Error::Error(ErrorCode code, const std::string &what,
             std::optional<std::size_t> line)
    : std::runtime_error(Decorate(code, what, line)), code_(code), line_(line) {}

}  // namespace uniemb
