#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uniemb/clspace.hpp"
#include "uniemb/universal.hpp"

namespace uniemb::synth {

// Desk-scale stand-in for duration-specialized encoders.
//
// Speaker j has an identity z_j uniform on the unit sphere. Encoder k maps an
// utterance of speaker j with duration d to e = z_j + sigma_k(d) * eps, where
// eps ~ N(0, I/dim) (unit expected squared norm) and
//   sigma_k(d) = noise_base * sqrt(d0 / min(d, d0)) * m_k(d).
// m_k(d) is 1 inside the encoder's duration regime and `specialization`
// outside it; the pooled encoder uses the midpoint (1 + specialization) / 2
// everywhere. Head column j is the normalized mean of the encoder's
// training-split embeddings of speaker j, mirroring how angular-margin heads
// align class weights with class centroids.
struct SynthConfig {
  std::size_t n_speakers = 200;
  std::size_t enroll_utts = 1;
  std::size_t test_utts = 2;
  std::size_t train_utts = 8;
  std::size_t dim = 64;
  std::uint64_t seed = 1;
  std::vector<double> test_durations = {2.0, 3.0, 4.0, 30.0};
  double enroll_duration = 30.0;  // "full"
  double noise_base = 0.6;
  double specialization = 3.0;
  double saturation_duration = 8.0;  // d0
  double regime_threshold = 4.0;     // short regime is d < threshold
  double short_train_duration = 2.0;
  double long_train_duration = 16.0;
};

enum class EncoderKind { kShort, kLong, kPooled };

inline constexpr const char *kShortEncoderId = "short";
inline constexpr const char *kLongEncoderId = "long";
inline constexpr const char *kPooledEncoderId = "pooled";

const char *EncoderId(EncoderKind kind);

// Throws InvalidConfig.
void Validate(const SynthConfig &cfg);

double NoiseScale(const SynthConfig &cfg, EncoderKind kind, double duration);

// "full" for the enrollment duration, otherwise e.g. "2s".
std::string ConditionName(const SynthConfig &cfg, double duration);

struct Condition {
  std::string name;
  double duration = 0.0;
  TrialSet trials;
};

struct SynthWorld {
  SynthConfig config;
  ClassificationHead head_short;
  ClassificationHead head_long;
  ClassificationHead head_pooled;
  ArchiveSet enroll;  // keyed by encoder id
  ArchiveSet test;
  std::vector<Condition> conditions;  // one per test duration
};

// Pure function of the config. Throws InvalidConfig.
SynthWorld GenerateWorld(const SynthConfig &cfg);

}  // namespace uniemb::synth
