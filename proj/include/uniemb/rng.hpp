#pragma once

#include <cstdint>
#include <initializer_list>

namespace uniemb {

std::uint64_t SplitMix64(std::uint64_t *state);

// xoshiro256++ seeded through splitmix64. Independent streams are derived by
// folding a sequence of tags (e.g. {kind, encoder, speaker, utterance}) into
// the seed, so any stream can be regenerated without replaying the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  std::uint64_t Next();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Standard normal by the Marsaglia polar method.
  double Normal();

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace uniemb
