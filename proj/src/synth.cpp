#include "uniemb/synth.hpp"

#include <cmath>
#include <cstdio>

#include "uniemb/error.hpp"
#include "uniemb/rng.hpp"

namespace uniemb::synth {

namespace {

// Stream tags.
enum : std::uint64_t { kTagSpeaker = 1, kTagTrain = 2, kTagEnroll = 3, kTagTest = 4 };

constexpr EncoderKind kAllEncoders[] = {EncoderKind::kShort, EncoderKind::kLong,
                                        EncoderKind::kPooled};

std::string SpeakerLabel(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%03zu", j);
  return buf;
}

std::vector<double> SpeakerIdentity(const SynthConfig &cfg, std::size_t j) {
  Rng rng = Rng::Stream(cfg.seed, {kTagSpeaker, j});
  std::vector<double> z(cfg.dim);
  for (double &x : z) x = rng.Normal();
  const double n = Norm(z);
  for (double &x : z) x /= n;
  return z;
}

std::vector<double> Observe(const SynthConfig &cfg, const std::vector<double> &z,
                            EncoderKind kind, double duration, Rng *rng) {
  const double sigma = NoiseScale(cfg, kind, duration) / std::sqrt(static_cast<double>(cfg.dim));
  std::vector<double> e(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) e[i] = z[i] + sigma * rng->Normal();
  return e;
}

double TrainDuration(const SynthConfig &cfg, EncoderKind kind, std::size_t u) {
  switch (kind) {
    case EncoderKind::kShort: return cfg.short_train_duration;
    case EncoderKind::kLong: return cfg.long_train_duration;
    case EncoderKind::kPooled:
      return u % 2 == 0 ? cfg.short_train_duration : cfg.long_train_duration;
  }
  return cfg.long_train_duration;
}

ClassificationHead BuildHead(const SynthConfig &cfg,
                             const std::vector<std::vector<double>> &identities,
                             EncoderKind kind, const std::vector<std::string> &labels) {
  Matrix w(cfg.dim, cfg.n_speakers);
  for (std::size_t j = 0; j < cfg.n_speakers; ++j) {
    Rng rng = Rng::Stream(cfg.seed, {kTagTrain, static_cast<std::uint64_t>(kind), j});
    std::vector<double> mean(cfg.dim, 0.0);
    for (std::size_t u = 0; u < cfg.train_utts; ++u) {
      const auto e = Observe(cfg, identities[j], kind, TrainDuration(cfg, kind, u), &rng);
      for (std::size_t i = 0; i < cfg.dim; ++i) mean[i] += e[i];
    }
    const double n = Norm(mean);
    for (std::size_t i = 0; i < cfg.dim; ++i) w(i, j) = mean[i] / n;
  }
  return ClassificationHead(std::move(w), EncoderId(kind), labels);
}

}  // namespace

const char *EncoderId(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kShort: return kShortEncoderId;
    case EncoderKind::kLong: return kLongEncoderId;
    case EncoderKind::kPooled: return kPooledEncoderId;
  }
  return kPooledEncoderId;
}

void Validate(const SynthConfig &cfg) {
  auto fail = [](const std::string &what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (cfg.n_speakers < 2) fail("need at least 2 speakers");
  if (cfg.dim < 2) fail("dim must be >= 2");
  if (cfg.enroll_utts < 1 || cfg.test_utts < 1 || cfg.train_utts < 1)
    fail("utterance counts must be >= 1");
  if (!(cfg.noise_base > 0.0) || !std::isfinite(cfg.noise_base)) fail("noise_base must be > 0");
  if (!(cfg.specialization >= 1.0) || !std::isfinite(cfg.specialization))
    fail("specialization must be >= 1");
  if (cfg.test_durations.empty()) fail("no test durations");
  for (double d : cfg.test_durations)
    if (!(d > 0.0) || !std::isfinite(d)) fail("durations must be positive");
  for (double d : {cfg.enroll_duration, cfg.saturation_duration, cfg.regime_threshold,
                   cfg.short_train_duration, cfg.long_train_duration})
    if (!(d > 0.0) || !std::isfinite(d)) fail("durations must be positive");
  for (std::size_t i = 0; i < cfg.test_durations.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.test_durations.size(); ++k)
      if (cfg.test_durations[i] == cfg.test_durations[k]) fail("repeated test duration");
}

double NoiseScale(const SynthConfig &cfg, EncoderKind kind, double duration) {
  const double d0 = cfg.saturation_duration;
  const double base = cfg.noise_base * std::sqrt(d0 / std::min(duration, d0));
  const bool short_regime = duration < cfg.regime_threshold;
  double mismatch = 1.0;
  switch (kind) {
    case EncoderKind::kShort: mismatch = short_regime ? 1.0 : cfg.specialization; break;
    case EncoderKind::kLong: mismatch = short_regime ? cfg.specialization : 1.0; break;
    case EncoderKind::kPooled: mismatch = 0.5 * (1.0 + cfg.specialization); break;
  }
  return base * mismatch;
}

std::string ConditionName(const SynthConfig &cfg, double duration) {
  if (duration == cfg.enroll_duration) return "full";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gs", duration);
  return buf;
}

SynthWorld GenerateWorld(const SynthConfig &cfg) {
  Validate(cfg);

  std::vector<std::vector<double>> identities;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < cfg.n_speakers; ++j) {
    identities.push_back(SpeakerIdentity(cfg, j));
    labels.push_back(SpeakerLabel(j));
  }

  SynthWorld world{cfg,
                   BuildHead(cfg, identities, EncoderKind::kShort, labels),
                   BuildHead(cfg, identities, EncoderKind::kLong, labels),
                   BuildHead(cfg, identities, EncoderKind::kPooled, labels),
                   {},
                   {},
                   {}};

  std::vector<std::string> enroll_ids;
  std::vector<std::size_t> enroll_spk;
  for (std::size_t j = 0; j < cfg.n_speakers; ++j)
    for (std::size_t u = 0; u < cfg.enroll_utts; ++u) {
      enroll_ids.push_back(labels[j] + "-e" + std::to_string(u));
      enroll_spk.push_back(j);
    }

  for (EncoderKind kind : kAllEncoders) {
    EmbeddingArchive enroll(cfg.dim);
    for (std::size_t j = 0; j < cfg.n_speakers; ++j)
      for (std::size_t u = 0; u < cfg.enroll_utts; ++u) {
        Rng rng = Rng::Stream(cfg.seed, {kTagEnroll, static_cast<std::uint64_t>(kind), j, u});
        enroll.Add(labels[j] + "-e" + std::to_string(u),
                   static_cast<float>(cfg.enroll_duration),
                   Observe(cfg, identities[j], kind, cfg.enroll_duration, &rng));
      }
    world.enroll.emplace(EncoderId(kind), std::move(enroll));

    EmbeddingArchive test(cfg.dim);
    for (std::size_t c = 0; c < cfg.test_durations.size(); ++c) {
      const double d = cfg.test_durations[c];
      const std::string cond = ConditionName(cfg, d);
      for (std::size_t j = 0; j < cfg.n_speakers; ++j)
        for (std::size_t u = 0; u < cfg.test_utts; ++u) {
          Rng rng =
              Rng::Stream(cfg.seed, {kTagTest, static_cast<std::uint64_t>(kind), j, u, c});
          test.Add(labels[j] + "-t" + std::to_string(u) + "-" + cond, static_cast<float>(d),
                   Observe(cfg, identities[j], kind, d, &rng));
        }
    }
    world.test.emplace(EncoderId(kind), std::move(test));
  }

  for (double d : cfg.test_durations) {
    Condition cond{ConditionName(cfg, d), d, {}};
    for (std::size_t e = 0; e < enroll_ids.size(); ++e)
      for (std::size_t j = 0; j < cfg.n_speakers; ++j)
        for (std::size_t u = 0; u < cfg.test_utts; ++u)
          cond.trials.push_back({enroll_ids[e],
                                 labels[j] + "-t" + std::to_string(u) + "-" + cond.name,
                                 enroll_spk[e] == j ? TrialLabel::kTarget
                                                    : TrialLabel::kNontarget});
    world.conditions.push_back(std::move(cond));
  }
  return world;
}

}  // namespace uniemb::synth
