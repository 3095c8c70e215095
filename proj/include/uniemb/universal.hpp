#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "uniemb/archive.hpp"
#include "uniemb/clspace.hpp"
#include "uniemb/fusion.hpp"

namespace uniemb {

// Duration threshold (seconds) for switching from the short to the long encoder.
inline constexpr double kDefaultRoutingThreshold = 4.0;

// Utterances shorter than `threshold` go to the short encoder; everything
// else, including the exact boundary, goes to the long encoder. A threshold
// of 0 therefore always selects the long encoder.
struct RoutingPolicy {
  double threshold = kDefaultRoutingThreshold;
  std::string short_encoder_id;
  std::string long_encoder_id;

  // Short encoder on side 1 and long encoder on side 2 of `fp`.
  static RoutingPolicy ForFusion(const FusionProjector &fp,
                                 double threshold = kDefaultRoutingThreshold);
};

// Throws NonPositiveDuration, InvalidParams (bad threshold).
const std::string &Route(const RoutingPolicy &policy, double duration);

struct UtteranceRecord {
  std::string id;
  double duration = 0.0;
  std::map<std::string, Embedding> embedding_by_encoder;
};

// Throws MissingEmbeddingForRoutedEncoder, EncoderNotInFusion.
Embedding EmbedUniversal(const RoutingPolicy &policy, const FusionProjector &fp,
                         const UtteranceRecord &u);

enum class TrialLabel { kTarget, kNontarget, kUnlabeled };

const char *TrialLabelName(TrialLabel label);

struct Trial {
  std::string enroll_id;
  std::string test_id;
  TrialLabel label = TrialLabel::kUnlabeled;

  friend bool operator==(const Trial &, const Trial &) = default;
};

using TrialSet = std::vector<Trial>;

// Archives of one data split keyed by encoder id.
using ArchiveSet = std::map<std::string, EmbeddingArchive>;

// Joins the records for `id` across all encoders. Throws UnknownUtteranceId,
// DurationMismatch.
UtteranceRecord LookupUtterance(const ArchiveSet &archives, const std::string &id);

// Scores in the projector's own reduced cl-space.
struct ProjectorScorer {
  Projector projector;
};
// Scores with one encoder through its block of a fusion projector.
struct FusionSideScorer {
  FusionProjector fusion;
  Side side = Side::kFirst;
};
// Duration-routed scoring in the shared space.
struct UniversalScorer {
  FusionProjector fusion;
  RoutingPolicy policy;
};
// Duration-independent weighted fusion of both encoders' embeddings.
struct BlendScorer {
  FusionProjector fusion;
  FusionWeights weights;
};

using Scorer = std::variant<ProjectorScorer, FusionSideScorer, UniversalScorer, BlendScorer>;

// The embedding a scorer compares for one utterance.
Embedding ScoringEmbedding(const Scorer &scorer, const UtteranceRecord &u);

struct ScoredTrial {
  Trial trial;
  double score = 0.0;
};

using ScoredTrials = std::vector<ScoredTrial>;

struct ScoreOptions {
  unsigned threads = 1;
};

// One cosine score per trial, in input order. Results do not depend on the
// thread count. Throws UnknownUtteranceId and embedding errors.
ScoredTrials ScoreTrials(const ArchiveSet &enroll, const ArchiveSet &test,
                         const TrialSet &trials, const Scorer &scorer,
                         const ScoreOptions &opts = {});

}  // namespace uniemb
