#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "uniemb/fusion.hpp"
#include "uniemb/metrics.hpp"
#include "uniemb/storage.hpp"
#include "uniemb/synth.hpp"
#include "uniemb/universal.hpp"

namespace uniemb {

inline constexpr const char *kToolVersion = "uniemb 1.0.0";

// The four systems compared on every duration condition: the two duration
// specialists, a single encoder trained on pooled durations, and the routed
// universal encoder.
enum class System { kLong, kShort, kPooled, kUniversal };

inline constexpr std::array<System, 4> kAllSystems = {System::kLong, System::kShort,
                                                      System::kPooled, System::kUniversal};

const char *SystemName(System s);

struct SystemModels {
  FusionProjector fusion;  // side 1 = short encoder, side 2 = long encoder
  Projector pooled;
};

// Fusion of the short and long heads (energy-rule rank unless given) and an
// eigen projector for the pooled head.
SystemModels BuildSystemModels(const synth::SynthWorld &world,
                               std::optional<std::size_t> fusion_rank = std::nullopt);

Scorer MakeScorer(System system, const SystemModels &models,
                  double threshold = kDefaultRoutingThreshold);

struct SystemResult {
  System system;
  std::string condition;
  double eer = 0.0;
  double min_dcf = 0.0;
};

std::vector<bool> TargetMask(const TrialSet &trials);

struct EvalOptions {
  double threshold = kDefaultRoutingThreshold;
  unsigned threads = 1;
  DcfParams dcf;
};

// Scores every system on every condition. When `scores_dir` is set, each score
// list is written there as <system>_<condition>.scores.
std::vector<SystemResult> EvaluateSystems(const synth::SynthWorld &world,
                                          const SystemModels &models, const EvalOptions &opts,
                                          const std::optional<std::filesystem::path> &scores_dir =
                                              std::nullopt);

const SystemResult &FindResult(const std::vector<SystemResult> &results, System system,
                               const std::string &condition);

// Rows = systems, columns = conditions, cells = "EER% / minDCF".
std::string FormatResultsTable(const std::vector<SystemResult> &results,
                               const std::vector<std::string> &conditions, double p_tar);

// Heads, label sidecar, archives, trial lists and manifest.txt for a world.
void WriteWorld(const synth::SynthWorld &world, const std::filesystem::path &dir);

struct DemoOptions {
  synth::SynthConfig synth;
  std::optional<std::size_t> fusion_rank;
  EvalOptions eval;
};

// synth -> projectors -> fusion -> scoring of all systems -> eval. Writes the
// whole tree under out_dir and prints the results table to `out`.
std::vector<SystemResult> RunDemo(const DemoOptions &opts, const std::filesystem::path &out_dir,
                                  std::ostream &out);

}  // namespace uniemb
