#include "uniemb/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "uniemb/error.hpp"

namespace uniemb {

namespace fs = std::filesystem;

namespace {

// Shortest text that reads back to the same double.
std::string Shortest(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string Fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

const char *SystemName(System s) {
  switch (s) {
    case System::kLong: return "long";
    case System::kShort: return "short";
    case System::kPooled: return "pooled";
    case System::kUniversal: return "uni";
  }
  return "uni";
}

SystemModels BuildSystemModels(const synth::SynthWorld &world,
                               std::optional<std::size_t> fusion_rank) {
  return {BuildFusionProjector(world.head_short, world.head_long, fusion_rank),
          BuildProjector(world.head_pooled, ProjectorMethod::kEigen)};
}

Scorer MakeScorer(System system, const SystemModels &models, double threshold) {
  switch (system) {
    case System::kLong: return FusionSideScorer{models.fusion, Side::kSecond};
    case System::kShort: return FusionSideScorer{models.fusion, Side::kFirst};
    case System::kPooled: return ProjectorScorer{models.pooled};
    case System::kUniversal:
      return UniversalScorer{models.fusion, RoutingPolicy::ForFusion(models.fusion, threshold)};
  }
  throw Error(ErrorCode::kInvalidParams, "unknown system");
}

std::vector<bool> TargetMask(const TrialSet &trials) {
  std::vector<bool> mask;
  mask.reserve(trials.size());
  for (const Trial &t : trials) {
    if (t.label == TrialLabel::kUnlabeled)
      throw Error(ErrorCode::kInvalidParams,
                  "unlabeled trial " + t.enroll_id + " / " + t.test_id);
    mask.push_back(t.label == TrialLabel::kTarget);
  }
  return mask;
}

std::vector<SystemResult> EvaluateSystems(const synth::SynthWorld &world,
                                          const SystemModels &models, const EvalOptions &opts,
                                          const std::optional<fs::path> &scores_dir) {
  std::vector<SystemResult> results;
  for (System system : kAllSystems) {
    const Scorer scorer = MakeScorer(system, models, opts.threshold);
    for (const synth::Condition &cond : world.conditions) {
      const ScoredTrials scored =
          ScoreTrials(world.enroll, world.test, cond.trials, scorer, {opts.threads});
      if (scores_dir)
        WriteScores(*scores_dir / (std::string(SystemName(system)) + "_" + cond.name + ".scores"),
                    scored);
      std::vector<double> s;
      s.reserve(scored.size());
      for (const auto &st : scored) s.push_back(st.score);
      const std::vector<DetPoint> det = ComputeDetPoints(s, TargetMask(cond.trials));
      results.push_back(
          {system, cond.name, EerFromDet(det), MinDcfFromDet(det, opts.dcf)});
    }
  }
  return results;
}

const SystemResult &FindResult(const std::vector<SystemResult> &results, System system,
                               const std::string &condition) {
  for (const auto &r : results)
    if (r.system == system && r.condition == condition) return r;
  throw Error(ErrorCode::kInvalidParams,
              std::string("no result for ") + SystemName(system) + " / " + condition);
}

std::string FormatResultsTable(const std::vector<SystemResult> &results,
                               const std::vector<std::string> &conditions, double p_tar) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "EER [%%] / minDCF(%g)\n", p_tar);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-8s", "system");
  os << buf;
  for (const auto &c : conditions) {
    std::snprintf(buf, sizeof buf, " | %-14s", c.c_str());
    os << buf;
  }
  os << "\n";
  for (System system : kAllSystems) {
    std::snprintf(buf, sizeof buf, "%-8s", SystemName(system));
    os << buf;
    for (const auto &c : conditions) {
      const SystemResult &r = FindResult(results, system, c);
      std::snprintf(buf, sizeof buf, " | %6.2f / %.3f", 100.0 * r.eer, r.min_dcf);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

void WriteWorld(const synth::SynthWorld &world, const fs::path &dir) {
  fs::create_directories(dir);
  const synth::SynthConfig &cfg = world.config;

  std::vector<std::string> files;
  auto note = [&](const std::string &name) { files.push_back(name); };

  for (const ClassificationHead *head : {&world.head_short, &world.head_long, &world.head_pooled}) {
    const std::string name = "head_" + head->encoder_id() + ".uemx";
    WriteMatrix(dir / name, head->w());
    note(name);
  }
  WriteClassLabels(dir / "classes.txt", *world.head_short.class_labels());
  note("classes.txt");
  for (const auto &[encoder, archive] : world.enroll) {
    const std::string name = "enroll_" + encoder + ".ueea";
    WriteArchive(dir / name, archive);
    note(name);
  }
  for (const auto &[encoder, archive] : world.test) {
    const std::string name = "test_" + encoder + ".ueea";
    WriteArchive(dir / name, archive);
    note(name);
  }
  for (const auto &cond : world.conditions) {
    const std::string name = "trials_" + cond.name + ".txt";
    WriteTrials(dir / name, cond.trials);
    note(name);
  }

  Manifest m;
  m.Set("tool_version", kToolVersion);
  m.Set("seed", std::to_string(cfg.seed));
  m.Set("n_speakers", std::to_string(cfg.n_speakers));
  m.Set("enroll_utts", std::to_string(cfg.enroll_utts));
  m.Set("test_utts", std::to_string(cfg.test_utts));
  m.Set("train_utts", std::to_string(cfg.train_utts));
  m.Set("dim", std::to_string(cfg.dim));
  std::string durations;
  for (double d : cfg.test_durations) durations += (durations.empty() ? "" : ",") + Shortest(d);
  m.Set("test_durations", durations);
  m.Set("enroll_duration", Shortest(cfg.enroll_duration));
  m.Set("noise_base", Shortest(cfg.noise_base));
  m.Set("specialization", Shortest(cfg.specialization));
  m.Set("saturation_duration", Shortest(cfg.saturation_duration));
  m.Set("regime_threshold", Shortest(cfg.regime_threshold));
  m.Set("short_train_duration", Shortest(cfg.short_train_duration));
  m.Set("long_train_duration", Shortest(cfg.long_train_duration));
  m.Set("pooled_encoder", "synthetic stand-in with midpoint mismatch noise");
  for (const auto &f : files) m.Set("checksum." + f, FileChecksum(dir / f));
  WriteManifest(dir / "manifest.txt", m);
}

std::vector<SystemResult> RunDemo(const DemoOptions &opts, const fs::path &out_dir,
                                  std::ostream &out) {
  const synth::SynthWorld world = synth::GenerateWorld(opts.synth);
  WriteWorld(world, out_dir / "world");

  const SystemModels models = BuildSystemModels(world, opts.fusion_rank);
  const fs::path model_dir = out_dir / "models";
  fs::create_directories(model_dir);
  WriteFusion(model_dir / "fusion_short_long.uefp", models.fusion);
  WriteProjector(model_dir / "projector_pooled.uepj", models.pooled);

  const fs::path scores_dir = out_dir / "scores";
  fs::create_directories(scores_dir);
  const std::vector<SystemResult> results = EvaluateSystems(world, models, opts.eval, scores_dir);

  std::vector<std::string> conditions;
  for (const auto &c : world.conditions) conditions.push_back(c.name);
  const std::string table = FormatResultsTable(results, conditions, opts.eval.dcf.p_tar);

  std::string tsv = "system\tcondition\teer\tmin_dcf\n";
  for (const auto &r : results)
    tsv += std::string(SystemName(r.system)) + "\t" + r.condition + "\t" + Fixed(r.eer, 6) +
           "\t" + Fixed(r.min_dcf, 6) + "\n";
  AtomicWriteFile(out_dir / "results.tsv", tsv);
  AtomicWriteFile(out_dir / "results_table.txt", table);

  Manifest m;
  m.Set("tool_version", kToolVersion);
  m.Set("seed", std::to_string(opts.synth.seed));
  m.Set("fusion_rank", std::to_string(models.fusion.rank));
  m.Set("fusion_eigen_energy", Shortest(models.fusion.eigen_energy));
  m.Set("pooled_rank", std::to_string(models.pooled.rank));
  m.Set("routing_threshold", Shortest(opts.eval.threshold));
  m.Set("p_tar", Shortest(opts.eval.dcf.p_tar));
  m.Set("c_miss", Shortest(opts.eval.dcf.c_miss));
  m.Set("c_fa", Shortest(opts.eval.dcf.c_fa));
  std::vector<std::string> outputs = {"models/fusion_short_long.uefp",
                                      "models/projector_pooled.uepj", "results.tsv",
                                      "results_table.txt"};
  for (const auto &r : results)
    outputs.push_back("scores/" + std::string(SystemName(r.system)) + "_" + r.condition +
                      ".scores");
  for (const auto &f : outputs) m.Set("checksum." + f, FileChecksum(out_dir / f));
  WriteManifest(out_dir / "manifest.txt", m);

  out << "fusion rank " << models.fusion.rank << " (energy " << Fixed(models.fusion.eigen_energy, 4)
      << "), pooled projector rank " << models.pooled.rank << "\n";
  out << table;
  return results;
}

}  // namespace uniemb
