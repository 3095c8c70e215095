#include "uniemb/universal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <unordered_map>

#include "uniemb/error.hpp"

namespace uniemb {

RoutingPolicy RoutingPolicy::ForFusion(const FusionProjector &fp, double threshold) {
  return {threshold, fp.encoder_ids.first, fp.encoder_ids.second};
}

const std::string &Route(const RoutingPolicy &policy, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw Error(ErrorCode::kNonPositiveDuration,
                "duration must be positive, got " + std::to_string(duration));
  if (!(policy.threshold >= 0.0))
    throw Error(ErrorCode::kInvalidParams, "routing threshold must be >= 0");
  return duration < policy.threshold ? policy.short_encoder_id : policy.long_encoder_id;
}

namespace {

Side SideOf(const FusionProjector &fp, const std::string &encoder_id) {
  if (encoder_id == fp.encoder_ids.first) return Side::kFirst;
  if (encoder_id == fp.encoder_ids.second) return Side::kSecond;
  throw Error(ErrorCode::kEncoderNotInFusion,
              "encoder '" + encoder_id + "' is not part of the fusion projector");
}

const Embedding &EmbeddingFor(const UtteranceRecord &u, const std::string &encoder_id) {
  auto it = u.embedding_by_encoder.find(encoder_id);
  if (it == u.embedding_by_encoder.end())
    throw Error(ErrorCode::kMissingEmbeddingForRoutedEncoder,
                "utterance '" + u.id + "' has no embedding from encoder '" + encoder_id + "'");
  return it->second;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with contiguous
// chunks. The exception of the lowest failing chunk is rethrown.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned threads, Fn fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(n, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

// Utterance ids in order of first appearance.
std::vector<std::string> UniqueIds(const TrialSet &trials, bool enroll_side) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> seen;
  for (const Trial &t : trials) {
    const std::string &id = enroll_side ? t.enroll_id : t.test_id;
    if (seen.emplace(id, ids.size()).second) ids.push_back(id);
  }
  return ids;
}

}  // namespace

Embedding EmbedUniversal(const RoutingPolicy &policy, const FusionProjector &fp,
                         const UtteranceRecord &u) {
  const std::string &encoder = Route(policy, u.duration);
  const Side side = SideOf(fp, encoder);
  return ProjectSide(fp, side, EmbeddingFor(u, encoder));
}

const char *TrialLabelName(TrialLabel label) {
  switch (label) {
    case TrialLabel::kTarget: return "target";
    case TrialLabel::kNontarget: return "nontarget";
    case TrialLabel::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

UtteranceRecord LookupUtterance(const ArchiveSet &archives, const std::string &id) {
  UtteranceRecord u{id, 0.0, {}};
  bool found = false;
  float duration = 0.0f;
  for (const auto &[encoder, archive] : archives) {
    const ArchiveRecord *rec = archive.Find(id);
    if (!rec) continue;
    if (found && rec->duration != duration)
      throw Error(ErrorCode::kDurationMismatch,
                  "utterance '" + id + "' has different durations across encoders");
    found = true;
    duration = rec->duration;
    u.embedding_by_encoder.emplace(encoder, Embedding(rec->values));
  }
  if (!found) throw Error(ErrorCode::kUnknownUtteranceId, "unknown utterance id '" + id + "'");
  u.duration = duration;
  return u;
}

Embedding ScoringEmbedding(const Scorer &scorer, const UtteranceRecord &u) {
  struct Visitor {
    const UtteranceRecord &u;
    Embedding operator()(const ProjectorScorer &s) const {
      return Project(s.projector, EmbeddingFor(u, s.projector.source_encoder_id));
    }
    Embedding operator()(const FusionSideScorer &s) const {
      return ProjectSide(s.fusion, s.side, EmbeddingFor(u, s.fusion.encoder_id(s.side)));
    }
    Embedding operator()(const UniversalScorer &s) const {
      return EmbedUniversal(s.policy, s.fusion, u);
    }
    Embedding operator()(const BlendScorer &s) const {
      return FuseWeighted(s.fusion, EmbeddingFor(u, s.fusion.encoder_ids.first),
                          EmbeddingFor(u, s.fusion.encoder_ids.second), s.weights.w1,
                          s.weights.w2);
    }
  };
  return std::visit(Visitor{u}, scorer);
}

ScoredTrials ScoreTrials(const ArchiveSet &enroll, const ArchiveSet &test,
                         const TrialSet &trials, const Scorer &scorer,
                         const ScoreOptions &opts) {
  // Resolve every id up front so lookup failures are reported in trial order.
  auto resolve = [](const ArchiveSet &archives, const std::vector<std::string> &ids) {
    std::vector<UtteranceRecord> records;
    records.reserve(ids.size());
    for (const auto &id : ids) records.push_back(LookupUtterance(archives, id));
    return records;
  };
  const std::vector<std::string> enroll_ids = UniqueIds(trials, true);
  const std::vector<std::string> test_ids = UniqueIds(trials, false);
  const std::vector<UtteranceRecord> enroll_recs = resolve(enroll, enroll_ids);
  const std::vector<UtteranceRecord> test_recs = resolve(test, test_ids);

  auto embed_all = [&](const std::vector<UtteranceRecord> &recs) {
    std::vector<std::vector<double>> out(recs.size());
    ParallelFor(recs.size(), opts.threads, [&](std::size_t i) {
      const Embedding e = ScoringEmbedding(scorer, recs[i]);
      out[i].assign(e.values().begin(), e.values().end());
    });
    return out;
  };
  const auto enroll_emb = embed_all(enroll_recs);
  const auto test_emb = embed_all(test_recs);

  std::unordered_map<std::string, std::size_t> enroll_pos, test_pos;
  for (std::size_t i = 0; i < enroll_ids.size(); ++i) enroll_pos.emplace(enroll_ids[i], i);
  for (std::size_t i = 0; i < test_ids.size(); ++i) test_pos.emplace(test_ids[i], i);

  ScoredTrials out(trials.size());
  ParallelFor(trials.size(), opts.threads, [&](std::size_t i) {
    const Trial &t = trials[i];
    out[i].trial = t;
    out[i].score = Cosine(enroll_emb[enroll_pos.at(t.enroll_id)],
                          test_emb[test_pos.at(t.test_id)]);
  });
  return out;
}

}  // namespace uniemb
