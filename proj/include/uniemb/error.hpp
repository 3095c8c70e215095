#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uniemb {

enum class ErrorCode {
  // linear algebra
  kShapeMismatch,
  kNotSquare,
  kNotSymmetric,
  kRankDeficient,
  kNoConvergence,
  kRankOutOfRange,
  kNegativeEigenvalueInRange,
  // embeddings / projection
  kDimMismatch,
  kZeroVector,
  kNonFinite,
  kClassSetMismatch,
  kBothWeightsZero,
  // routing / scoring
  kNonPositiveDuration,
  kMissingEmbeddingForRoutedEncoder,
  kEncoderNotInFusion,
  kUnknownUtteranceId,
  kDurationMismatch,
  // metrics
  kEmptyInput,
  kSingleClassOnly,
  kInvalidParams,
  // synthetic data
  kInvalidConfig,
  // storage
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedFile,
  kMalformedLine,
  kDuplicateUtteranceId,
  kInconsistentDim,
  kTrailingData,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported as uniemb::Error. Text-format errors carry
// the 1-based line number of the offending line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace uniemb
