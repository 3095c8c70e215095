// uniemb: command-line front end for building common embedding spaces,
// duration-routed trial scoring and detection metrics.
//
// Exit status: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uniemb/clspace.hpp"
#include "uniemb/error.hpp"
#include "uniemb/fusion.hpp"
#include "uniemb/metrics.hpp"
#include "uniemb/pipeline.hpp"
#include "uniemb/storage.hpp"
#include "uniemb/synth.hpp"
#include "uniemb/universal.hpp"

namespace fs = std::filesystem;
using namespace uniemb;

namespace {

constexpr const char *kEnvHelp =
    "Environment: UNIEMB_VERBOSE=1 prints progress messages on stderr.";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool Verbose() {
  const char *v = std::getenv("UNIEMB_VERBOSE");
  return v && *v && std::string(v) != "0";
}

void Log(const std::string &msg) {
  if (Verbose()) std::cerr << "uniemb: " << msg << "\n";
}

std::string Fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string G17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// projector build

struct ProjectorArgs {
  std::string head, labels, encoder_id, method = "eigen", out;
  std::optional<std::size_t> rank;
};

int RunProjector(const ProjectorArgs &a) {
  std::optional<fs::path> labels;
  if (!a.labels.empty()) labels = a.labels;
  const std::string id = a.encoder_id.empty() ? fs::path(a.head).stem().string() : a.encoder_id;
  const ClassificationHead head = ReadHead(a.head, id, labels);
  const ProjectorMethod method =
      a.method == "cholesky" ? ProjectorMethod::kCholesky : ProjectorMethod::kEigen;
  if (method == ProjectorMethod::kCholesky && a.rank && *a.rank != head.embedding_dim())
    throw UsageError("--method cholesky cannot reduce rank (head dim is " +
                     std::to_string(head.embedding_dim()) + ", --rank " +
                     std::to_string(*a.rank) + ")");
  if (a.rank && (*a.rank < 1 || *a.rank > head.embedding_dim()))
    throw UsageError("--rank must be in [1, " + std::to_string(head.embedding_dim()) + "]");
  const Projector p = BuildProjector(head, method, a.rank);
  WriteProjector(a.out, p);
  Log("projector " + std::string(MethodName(p.method)) + " rank " + std::to_string(p.rank) +
      " jitter " + G17(p.applied_jitter) + " -> " + a.out);
  if (p.applied_jitter > 0.0)
    std::cerr << "uniemb: warning: Cholesky needed diagonal jitter " << G17(p.applied_jitter)
              << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fusion build

struct FusionArgs {
  std::string head1, head2, labels1, labels2, id1 = "short", id2 = "long", out;
  std::optional<std::size_t> rank;
  double w1 = 1.0, w2 = 1.0;
};

int RunFusion(const FusionArgs &a) {
  auto opt_path = [](const std::string &s) {
    return s.empty() ? std::nullopt : std::optional<fs::path>(s);
  };
  if (a.id1 == a.id2) throw UsageError("--id1 and --id2 must differ");
  const ClassificationHead h1 = ReadHead(a.head1, a.id1, opt_path(a.labels1));
  const ClassificationHead h2 = ReadHead(a.head2, a.id2, opt_path(a.labels2));
  if (a.rank && (*a.rank < 1 || *a.rank > 2 * h1.embedding_dim()))
    throw UsageError("--rank must be in [1, " + std::to_string(2 * h1.embedding_dim()) + "]");
  if (a.w1 == 0.0 && a.w2 == 0.0) throw UsageError("--w1 and --w2 cannot both be zero");
  const FusionProjector fp = BuildFusionProjector(h1, h2, a.rank, {a.w1, a.w2});
  WriteFusion(a.out, fp);

  Manifest meta;
  meta.Set("tool_version", kToolVersion);
  meta.Set("rank", std::to_string(fp.rank));
  meta.Set("eigen_energy", G17(fp.eigen_energy));
  meta.Set("class_set_check", fp.class_labels_verified ? "labels" : "count-only");
  if (!fp.class_labels_verified) {
    meta.Set("warning", "class sets not verified by labels; only N_class equality was checked");
    std::cerr << "uniemb: WARNING: heads carry no class labels; class-set agreement was checked "
                 "by class count only\n";
  }
  WriteManifest(a.out + ".meta", meta);
  Log("fusion rank " + std::to_string(fp.rank) + " energy " + G17(fp.eigen_energy) + " -> " +
      a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// project

struct ProjectArgs {
  std::string projector, in, out;
  std::optional<int> side;
};

int RunProject(const ProjectArgs &a) {
  const EmbeddingArchive in = ReadArchive(a.in);
  std::optional<EmbeddingArchive> out;
  switch (DetectFileKind(a.projector)) {
    case FileKind::kProjector: {
      if (a.side) throw UsageError("--side only applies to fusion projectors");
      const Projector p = ReadProjector(a.projector);
      out.emplace(p.rank);
      for (const auto &rec : in.records()) {
        const Embedding y = Project(p, Embedding(rec.values));
        out->Add(rec.id, rec.duration, {y.values().begin(), y.values().end()});
      }
      break;
    }
    case FileKind::kFusion: {
      if (!a.side) throw UsageError("--side 1|2 is required with a fusion projector");
      const FusionProjector fp = ReadFusion(a.projector);
      const Side side = *a.side == 1 ? Side::kFirst : Side::kSecond;
      out.emplace(fp.rank);
      for (const auto &rec : in.records()) {
        const Embedding y = ProjectSide(fp, side, Embedding(rec.values));
        out->Add(rec.id, rec.duration, {y.values().begin(), y.values().end()});
      }
      break;
    }
    default:
      throw Error(ErrorCode::kBadMagic, "'" + a.projector + "' is neither UEPJ nor UEFP");
  }
  WriteArchive(a.out, *out);
  Log("projected " + std::to_string(out->size()) + " embeddings -> " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string mode = "universal", fusion, projector, trials, out;
  std::vector<std::string> enroll, test;
  std::optional<int> side;
  double threshold = kDefaultRoutingThreshold;
  std::optional<double> w1, w2;
  unsigned threads = 1;
};

int RunScore(const ScoreArgs &a) {
  std::optional<Scorer> scorer;
  std::vector<std::string> encoders;  // archive order

  if (a.mode == "single") {
    if (a.enroll.size() != 1 || a.test.size() != 1)
      throw UsageError("--mode single takes exactly one --enroll and one --test archive");
    if (!a.projector.empty() == !a.fusion.empty())
      throw UsageError("--mode single needs exactly one of --projector or --fusion");
    if (!a.projector.empty()) {
      if (a.side) throw UsageError("--side only applies with --fusion");
      Projector p = ReadProjector(a.projector);
      encoders = {p.source_encoder_id};
      scorer = ProjectorScorer{std::move(p)};
    } else {
      if (!a.side) throw UsageError("--mode single with --fusion requires --side 1|2");
      FusionProjector fp = ReadFusion(a.fusion);
      const Side side = *a.side == 1 ? Side::kFirst : Side::kSecond;
      encoders = {fp.encoder_id(side)};
      scorer = FusionSideScorer{std::move(fp), side};
    }
  } else {
    if (a.fusion.empty()) throw UsageError("--mode " + a.mode + " requires --fusion");
    if (!a.projector.empty() || a.side)
      throw UsageError("--projector/--side only apply to --mode single");
    if (a.enroll.size() != 2 || a.test.size() != 2)
      throw UsageError("--mode " + a.mode +
                       " takes two --enroll and two --test archives (side 1 then side 2)");
    FusionProjector fp = ReadFusion(a.fusion);
    encoders = {fp.encoder_ids.first, fp.encoder_ids.second};
    if (a.mode == "universal") {
      if (a.w1 || a.w2) throw UsageError("--w1/--w2 only apply to --mode blend");
      const RoutingPolicy policy = RoutingPolicy::ForFusion(fp, a.threshold);
      scorer = UniversalScorer{std::move(fp), policy};
    } else {
      const FusionWeights w{a.w1.value_or(fp.default_weights.w1),
                            a.w2.value_or(fp.default_weights.w2)};
      if (w.w1 == 0.0 && w.w2 == 0.0) throw UsageError("--w1 and --w2 cannot both be zero");
      scorer = BlendScorer{std::move(fp), w};
    }
  }

  ArchiveSet enroll, test;
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    enroll.emplace(encoders[i], ReadArchive(a.enroll[i]));
    test.emplace(encoders[i], ReadArchive(a.test[i]));
  }
  const TrialSet trials = ReadTrials(a.trials);
  const ScoredTrials scored = ScoreTrials(enroll, test, trials, *scorer, {a.threads});
  WriteScores(a.out, scored);
  Log("scored " + std::to_string(scored.size()) + " trials -> " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string scores, trials, det_csv;
  DcfParams dcf;
};

int RunEval(const EvalArgs &a) {
  if (!(a.dcf.p_tar > 0.0 && a.dcf.p_tar < 1.0) || !(a.dcf.c_miss > 0.0) || !(a.dcf.c_fa > 0.0))
    throw UsageError("need 0 < --ptar < 1 and positive --cmiss/--cfa");
  const std::vector<ScoreLine> lines = ReadScores(a.scores);
  const TrialSet trials = ReadTrials(a.trials);

  std::map<std::pair<std::string, std::string>, double> by_key;
  for (const auto &l : lines)
    if (!by_key.emplace(std::make_pair(l.enroll_id, l.test_id), l.score).second)
      throw Error(ErrorCode::kInvalidParams,
                  "duplicate score for " + l.enroll_id + " / " + l.test_id);
  std::vector<double> scores;
  std::vector<bool> is_target;
  for (const Trial &t : trials) {
    if (t.label == TrialLabel::kUnlabeled)
      throw Error(ErrorCode::kInvalidParams,
                  "eval needs labeled trials; " + t.enroll_id + " / " + t.test_id + " is unlabeled");
    auto it = by_key.find({t.enroll_id, t.test_id});
    if (it == by_key.end())
      throw Error(ErrorCode::kUnknownUtteranceId,
                  "no score for trial " + t.enroll_id + " / " + t.test_id);
    scores.push_back(it->second);
    is_target.push_back(t.label == TrialLabel::kTarget);
  }
  const DetMetrics m = Evaluate(scores, is_target, a.dcf);
  char ptar[32];
  std::snprintf(ptar, sizeof ptar, "%g", a.dcf.p_tar);
  std::cout << "EER\t" << Fixed4(m.eer) << "\n";
  std::cout << "minDCF(" << ptar << ")\t" << Fixed4(m.min_dcf) << "\n";

  if (!a.det_csv.empty()) {
    std::string csv = "threshold,p_miss,p_fa\n";
    for (const DetPoint &p : m.det_points)
      csv += G17(p.threshold) + "," + G17(p.p_miss) + "," + G17(p.p_fa) + "\n";
    AtomicWriteFile(a.det_csv, csv);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth / pipeline demo

void AddSynthOptions(CLI::App *cmd, synth::SynthConfig *cfg) {
  cmd->add_option("--speakers", cfg->n_speakers, "Number of speakers = head classes")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  cmd->add_option("--dim", cfg->dim, "Embedding dimension l")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
  cmd->add_option("--seed", cfg->seed, "PRNG seed")->capture_default_str();
  cmd->add_option("--enroll-utts", cfg->enroll_utts, "Enrollment utterances per speaker")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--test-utts", cfg->test_utts,
                  "Test utterances per speaker and duration condition")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--train-utts", cfg->train_utts,
                  "Training utterances per speaker used to form head columns")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--durations", cfg->test_durations,
                  "Test durations in seconds; the enrollment duration is reported as 'full'. "
                  "Default 2,3,4,30: truncated 2/3/4 s protocols plus full recordings")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--enroll-duration", cfg->enroll_duration,
                  "Enrollment ('full') duration in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--noise-base", cfg->noise_base, "In-regime noise scale")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--specialization", cfg->specialization,
                  "Noise multiplier outside an encoder's duration regime (>= 1)")
      ->capture_default_str()
      ->check(CLI::Range(1.0, 1e6));
}

struct SynthArgs {
  std::string out_dir;
  synth::SynthConfig cfg;
};

int RunSynth(const SynthArgs &a) {
  const synth::SynthWorld world = synth::GenerateWorld(a.cfg);
  WriteWorld(world, a.out_dir);
  Log("synthetic world written to " + a.out_dir);
  return 0;
}

struct DemoArgs {
  std::string out_dir;
  DemoOptions opts;
};

int RunPipelineDemo(const DemoArgs &a) {
  RunDemo(a.opts, a.out_dir, std::cout);
  return 0;
}

// ---------------------------------------------------------------------------
// import-tsv

struct ImportArgs {
  std::string in, out;
};

int RunImport(const ImportArgs &a) {
  const EmbeddingArchive archive = ImportTsvEmbeddings(a.in);
  WriteArchive(a.out, archive);
  Log("imported " + std::to_string(archive.size()) + " embeddings of dim " +
      std::to_string(archive.dim()));
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"uniemb: common embedding spaces for speaker encoders, duration-routed "
               "cosine scoring and EER/minDCF evaluation"};
  app.footer(kEnvHelp);
  app.require_subcommand(1);

  // projector build
  ProjectorArgs pa;
  auto *projector = app.add_subcommand("projector", "Single-encoder projectors");
  projector->require_subcommand(1);
  auto *projector_build =
      projector->add_subcommand("build", "Build a projector L with L L^T = W W^T from a head");
  projector_build->footer(kEnvHelp);
  projector_build->add_option("--head", pa.head, "Classification head W (UEMX, l x N_class)")
      ->required()
      ->check(CLI::ExistingFile);
  projector_build->add_option("--labels", pa.labels, "Optional class label sidecar")
      ->check(CLI::ExistingFile);
  projector_build->add_option("--encoder-id", pa.encoder_id,
                              "Encoder id stored in the projector (default: head file stem)");
  projector_build->add_option("--method", pa.method, "cholesky (full rank) or eigen")
      ->capture_default_str()
      ->check(CLI::IsMember({"cholesky", "eigen"}));
  projector_build->add_option(
      "--rank", pa.rank,
      "Target dimension (eigen only). Default: smallest rank keeping 99% of the eigenvalue "
      "energy, capped at 256, the upper end of the 200-256 range a reduced space needs");
  projector_build->add_option("--out", pa.out, "Output projector (UEPJ)")->required();

  // fusion build
  FusionArgs fa;
  auto *fusion = app.add_subcommand("fusion", "Two-encoder fusion projectors");
  fusion->require_subcommand(1);
  auto *fusion_build = fusion->add_subcommand(
      "build", "Build the shared space of two heads trained on the same classes");
  fusion_build->footer(kEnvHelp);
  fusion_build->add_option("--head1", fa.head1, "Head of encoder 1 (short-duration encoder)")
      ->required()
      ->check(CLI::ExistingFile);
  fusion_build->add_option("--head2", fa.head2, "Head of encoder 2 (long-duration encoder)")
      ->required()
      ->check(CLI::ExistingFile);
  fusion_build->add_option("--labels1", fa.labels1, "Class labels of head 1")
      ->check(CLI::ExistingFile);
  fusion_build->add_option("--labels2", fa.labels2, "Class labels of head 2")
      ->check(CLI::ExistingFile);
  fusion_build->add_option("--id1", fa.id1, "Encoder id of side 1")->capture_default_str();
  fusion_build->add_option("--id2", fa.id2, "Encoder id of side 2")->capture_default_str();
  fusion_build->add_option(
      "--rank", fa.rank,
      "Shared dimension in [1, 2l]. Default: 99% eigenvalue energy, capped at 256 (a fused "
      "space of 200-256 dims keeps generalization)");
  fusion_build->add_option("--w1", fa.w1, "Default fusion weight of side 1 (no published value)")
      ->capture_default_str();
  fusion_build->add_option("--w2", fa.w2, "Default fusion weight of side 2 (no published value)")
      ->capture_default_str();
  fusion_build->add_option("--out", fa.out, "Output fusion projector (UEFP); <out>.meta gets "
                                            "the class-set check status")
      ->required();

  // project
  ProjectArgs pra;
  auto *project = app.add_subcommand("project", "Map an embedding archive into a projector space");
  project->footer(kEnvHelp);
  project->add_option("--projector", pra.projector, "UEPJ or UEFP file")
      ->required()
      ->check(CLI::ExistingFile);
  project->add_option("--side", pra.side, "Fusion side (1 or 2), UEFP only")
      ->check(CLI::IsMember({1, 2}));
  project->add_option("--in", pra.in, "Input archive (UEEA)")->required()->check(CLI::ExistingFile);
  project->add_option("--out", pra.out, "Output archive (UEEA)")->required();

  // score
  ScoreArgs sa;
  auto *score = app.add_subcommand("score", "Cosine-score a trial list");
  score->footer(std::string("Modes: single = one encoder (--projector, or --fusion with --side); "
                            "universal = duration-routed, short encoder below the threshold and "
                            "long encoder at or above it; blend = w1*y1 + w2*y2 of both "
                            "encoders.\nFor universal and blend give --enroll and --test twice: "
                            "side-1 (short) archive first, then side-2 (long).\n") +
                kEnvHelp);
  score->add_option("--mode", sa.mode, "single, universal or blend")
      ->capture_default_str()
      ->check(CLI::IsMember({"single", "universal", "blend"}));
  score->add_option("--fusion", sa.fusion, "Fusion projector (UEFP)")->check(CLI::ExistingFile);
  score->add_option("--projector", sa.projector, "Single projector (UEPJ), --mode single only")
      ->check(CLI::ExistingFile);
  score->add_option("--side", sa.side, "Fusion side for --mode single")
      ->check(CLI::IsMember({1, 2}));
  score->add_option("--threshold", sa.threshold,
                    "Routing threshold in seconds (default 4.0: the encoder-selection "
                    "threshold of the universal encoder setup)")
      ->check(CLI::Range(0.0, 1e300));
  score->add_option("--w1", sa.w1, "Blend weight of side 1 (default: stored in the UEFP)");
  score->add_option("--w2", sa.w2, "Blend weight of side 2 (default: stored in the UEFP)");
  score->add_option("--enroll", sa.enroll, "Enrollment archive(s) (UEEA)")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--test", sa.test, "Test archive(s) (UEEA)")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--trials", sa.trials, "Trial list")->required()->check(CLI::ExistingFile);
  score->add_option("--out", sa.out, "Output score file")->required();
  score->add_option("--threads", sa.threads,
                    "Worker threads (default 1; output is identical for any value)")
      ->check(CLI::Range(1u, 1024u));

  // eval
  EvalArgs ea;
  auto *eval = app.add_subcommand("eval", "EER and minDCF of a score file");
  eval->footer(kEnvHelp);
  eval->add_option("--scores", ea.scores, "Score file")->required()->check(CLI::ExistingFile);
  eval->add_option("--trials", ea.trials, "Labeled trial list")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--ptar", ea.dcf.p_tar,
                   "Target prior (default 0.05, the minDCF(0.05) operating point of NIST SRE "
                   "2019-style evaluation)");
  eval->add_option("--cmiss", ea.dcf.c_miss, "Miss cost (default 1, NIST normalization)");
  eval->add_option("--cfa", ea.dcf.c_fa, "False-alarm cost (default 1, NIST normalization)");
  eval->add_option("--det-csv", ea.det_csv, "Write DET points as threshold,p_miss,p_fa");

  // synth
  SynthArgs ya;
  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-encoder world");
  synth_cmd->footer(kEnvHelp);
  synth_cmd->add_option("--out-dir", ya.out_dir, "Output directory")->required();
  AddSynthOptions(synth_cmd, &ya.cfg);

  // import-tsv
  ImportArgs ia;
  auto *import = app.add_subcommand("import-tsv", "Convert id<TAB>duration<TAB>values to UEEA");
  import->footer(kEnvHelp);
  import->add_option("--in", ia.in, "TSV input")->required()->check(CLI::ExistingFile);
  import->add_option("--out", ia.out, "Output archive (UEEA)")->required();

  // pipeline demo
  DemoArgs da;
  auto *pipeline = app.add_subcommand("pipeline", "End-to-end runs");
  pipeline->require_subcommand(1);
  auto *demo = pipeline->add_subcommand(
      "demo", "synth -> projectors -> fusion -> score long/short/pooled/uni -> eval table");
  demo->footer(kEnvHelp);
  demo->add_option("--out-dir", da.out_dir, "Output directory")->required();
  AddSynthOptions(demo, &da.opts.synth);
  demo->add_option("--rank", da.opts.fusion_rank,
                   "Fusion rank (default: 99% energy, capped at 256)");
  demo->add_option("--threshold", da.opts.eval.threshold,
                   "Routing threshold in seconds (default 4.0)")
      ->check(CLI::Range(0.0, 1e300));
  demo->add_option("--ptar", da.opts.eval.dcf.p_tar, "Target prior (default 0.05)")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  demo->add_option("--threads", da.opts.eval.threads, "Worker threads (default 1)")
      ->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "uniemb: usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*projector_build) return RunProjector(pa);
    if (*fusion_build) return RunFusion(fa);
    if (*project) return RunProject(pra);
    if (*score) return RunScore(sa);
    if (*eval) return RunEval(ea);
    if (*synth_cmd) return RunSynth(ya);
    if (*import) return RunImport(ia);
    if (*demo) return RunPipelineDemo(da);
  } catch (const UsageError &e) {
    std::cerr << "uniemb: usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "uniemb: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "uniemb: error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "uniemb: usage error: no command\n";
  return 2;
}
