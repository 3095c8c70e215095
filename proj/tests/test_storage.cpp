#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "format_fuzz.hpp"
#include "test_util.hpp"
#include "uniemb/storage.hpp"

using namespace uniemb;
using namespace uniemb::testing;
namespace fs = std::filesystem;

namespace {

fs::path TempDir() {
  const fs::path p = fs::temp_directory_path() / ("uniemb_storage_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

bool SameBits(const Matrix &a, const Matrix &b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

int LineOf(auto fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.line() ? static_cast<int>(*e.line()) : 0;
  }
  return -1;
}

}  // namespace

TEST_SUITE("binary formats") {
  TEST_CASE("matrix roundtrip is bitwise") {
    std::mt19937_64 gen(71);
    for (int i = 0; i < 200; ++i) {
      const Matrix m = RandomFormatMatrix(gen);
      const auto bytes = EncodeMatrix(m);
      CHECK(bytes.size() == 16 + 8 * m.data().size());
      CHECK(SameBits(DecodeMatrix(bytes), m));
    }
  }

  TEST_CASE("matrix byte layout") {
    const auto b = EncodeMatrix(Matrix{{1.0, -2.0}});
    REQUIRE(b.size() == 32);
    CHECK(std::memcmp(b.data(), "UEMX", 4) == 0);
    CHECK(b[4] == 1);
    CHECK(b[8] == 1);   // rows
    CHECK(b[12] == 2);  // cols
    double v;
    std::memcpy(&v, b.data() + 24, 8);
    CHECK(v == -2.0);
  }

  TEST_CASE("archive roundtrip is bitwise") {
    std::mt19937_64 gen(72);
    for (int i = 0; i < 200; ++i) {
      const EmbeddingArchive a = RandomFormatArchive(gen);
      const auto bytes = EncodeArchive(a);
      const EmbeddingArchive back = DecodeArchive(bytes);
      CHECK(back.dim() == a.dim());
      REQUIRE(back.size() == a.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(back[k].id == a[k].id);
        CHECK(std::memcmp(&back[k].duration, &a[k].duration, 4) == 0);
        CHECK(std::memcmp(back[k].values.data(), a[k].values.data(), 8 * a.dim()) == 0);
      }
      CHECK(EncodeArchive(back) == bytes);
    }
  }

  TEST_CASE("projector roundtrip") {
    std::mt19937_64 gen(73);
    const ClassificationHead h(RandomMatrix(5, 12, gen), "enc-5");
    for (auto m : {ProjectorMethod::kCholesky, ProjectorMethod::kEigen}) {
      const Projector p = BuildProjector(h, m, m == ProjectorMethod::kEigen ? 3 : 5);
      const auto bytes = EncodeProjector(p);
      const Projector back = DecodeProjector(bytes);
      CHECK(SameBits(back.l_map, p.l_map));
      CHECK(back.method == p.method);
      CHECK(back.rank == p.rank);
      CHECK(back.source_encoder_id == "enc-5");
      CHECK(back.applied_jitter == p.applied_jitter);
      CHECK(EncodeProjector(back) == bytes);
    }
  }

  TEST_CASE("projector field validation") {
    std::mt19937_64 gen(74);
    const Projector p =
        BuildProjector(ClassificationHead(RandomMatrix(4, 9, gen), "e"), ProjectorMethod::kEigen, 2);
    auto bytes = EncodeProjector(p);
    bytes[8] = 9;  // method byte
    CHECK(CaptureCode([&] { DecodeProjector(bytes); }) == ErrorCode::kInvalidParams);
    bytes = EncodeProjector(p);
    PutU32(bytes, 9, 3);  // rank disagrees with l_map cols
    CHECK(CaptureCode([&] { DecodeProjector(bytes); }) == ErrorCode::kInconsistentDim);
  }

  TEST_CASE("fusion roundtrip") {
    std::mt19937_64 gen(75);
    const FusionProjector fp =
        BuildFusionProjector(ClassificationHead(RandomMatrix(4, 20, gen), "short"),
                             ClassificationHead(RandomMatrix(4, 20, gen), "long"), 6,
                             FusionWeights{0.25, 1.75});
    const auto bytes = EncodeFusion(fp);
    const FusionProjector back = DecodeFusion(bytes);
    CHECK(SameBits(back.l1, fp.l1));
    CHECK(SameBits(back.l2, fp.l2));
    CHECK(back.rank == 6);
    CHECK(back.encoder_ids == fp.encoder_ids);
    CHECK(back.default_weights.w1 == 0.25);
    CHECK(back.default_weights.w2 == 1.75);
    CHECK(back.eigen_energy == fp.eigen_energy);
    CHECK(EncodeFusion(back) == bytes);
  }

  TEST_CASE("malformed corpus") {
    for (const MalformedCase &c : MalformedCorpus()) {
      INFO(c.name);
      CHECK(CaptureCode([&] { c.decode(c.bytes); }) == c.expected);
    }
  }

  TEST_CASE("files, detection and atomic writes") {
    const fs::path dir = TempDir();
    const Matrix m{{1, 2}, {3, 4}};
    WriteMatrix(dir / "m.uemx", m);
    CHECK(ReadMatrix(dir / "m.uemx") == m);
    CHECK(DetectFileKind(dir / "m.uemx") == FileKind::kMatrix);
    AtomicWriteFile(dir / "junk", std::string_view("XXXXjunk"));
    CHECK(DetectFileKind(dir / "junk") == FileKind::kUnknown);
    CHECK(CaptureCode([&] { ReadMatrix(dir / "junk"); }) == ErrorCode::kBadMagic);
    CHECK(CaptureCode([&] { ReadMatrix(dir / "missing"); }) == ErrorCode::kIo);
    for (const auto &entry : fs::directory_iterator(dir))
      CHECK(entry.path().filename().string().find(".tmp.") == std::string::npos);
    CHECK(FileChecksum(dir / "junk").size() == 16);
    // FNV-1a 64 of the empty string is the offset basis.
    AtomicWriteFile(dir / "empty", std::string_view(""));
    CHECK(FileChecksum(dir / "empty") == "cbf29ce484222325");
    fs::remove_all(dir);
  }
}

TEST_SUITE("text formats") {
  TEST_CASE("trials") {
    const TrialSet t = ParseTrials("a\tb\ttarget\r\n\nc\td\tnontarget\ne\tf\tunlabeled\n");
    REQUIRE(t.size() == 3);
    CHECK(t[0] == Trial{"a", "b", TrialLabel::kTarget});
    CHECK(t[1].label == TrialLabel::kNontarget);
    CHECK(t[2].label == TrialLabel::kUnlabeled);
    CHECK(ParseTrials(FormatTrials(t)) == t);

    CHECK(CaptureCode([] { ParseTrials("a\tb\ttarget\nc\td\n"); }) == ErrorCode::kMalformedLine);
    CHECK(LineOf([] { ParseTrials("a\tb\ttarget\nc\td\n"); }) == 2);
    CHECK(LineOf([] { ParseTrials("a\tb\ttarget\n\n\nx\ty\tmaybe\n"); }) == 4);
    CHECK(LineOf([] { ParseTrials("a\tb\ttarget\textra\n"); }) == 1);
  }

  TEST_CASE("scores reparse within 1e-15 relative") {
    std::mt19937_64 gen(76);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScoredTrials s;
    for (int i = 0; i < 500; ++i)
      s.push_back({Trial{"e" + std::to_string(i), "t", TrialLabel::kUnlabeled},
                   u(gen) * std::pow(10.0, static_cast<int>(gen() % 20) - 10)});
    const auto back = ParseScores(FormatScores(s));
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(back[i].enroll_id == s[i].trial.enroll_id);
      CHECK(std::abs(back[i].score - s[i].score) <= 1e-15 * std::abs(s[i].score));
    }
    CHECK(LineOf([] { ParseScores("a\tb\t0.5\na\tb\tzzz\n"); }) == 2);
  }

  TEST_CASE("tsv import") {
    const EmbeddingArchive one = ParseTsvEmbeddings("u1\t2.5\t0.1 0.2 0.3\n");
    CHECK(one.size() == 1);
    CHECK(one.dim() == 3);
    CHECK(one[0].values == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(one[0].duration == 2.5f);

    CHECK(CaptureCode([] { ParseTsvEmbeddings("u1\t2\t1 2 3\nu2\t2\t1 2 3 4\n"); }) ==
          ErrorCode::kInconsistentDim);
    CHECK(LineOf([] { ParseTsvEmbeddings("u1\t2\t1 2 3\nu2\t2\t1 2 3 4\n"); }) == 2);
    CHECK(CaptureCode([] { ParseTsvEmbeddings("u1\t2\t1 2\nu1\t3\t1 2\n"); }) ==
          ErrorCode::kDuplicateUtteranceId);
    CHECK(CaptureCode([] { ParseTsvEmbeddings("u1\t2\n"); }) == ErrorCode::kMalformedLine);
    CHECK(CaptureCode([] { ParseTsvEmbeddings("u1\t-2\t1\n"); }) == ErrorCode::kMalformedLine);
    CHECK(CaptureCode([] { ParseTsvEmbeddings("u1\t2\t1 nan\n"); }) == ErrorCode::kMalformedLine);
    CHECK(CaptureCode([] { ParseTsvEmbeddings("\n"); }) == ErrorCode::kEmptyInput);

    std::mt19937_64 gen(77);
    EmbeddingArchive a(4);
    for (int i = 0; i < 10; ++i) a.Add("id" + std::to_string(i), 1.5f + i, RandomVector(4, gen));
    CHECK(EncodeArchive(ParseTsvEmbeddings(FormatTsvEmbeddings(a))) == EncodeArchive(a));
  }

  TEST_CASE("manifest") {
    Manifest m;
    m.Set("tool", "uniemb 1.0.0");
    m.Set("seed", "7");
    CHECK(CaptureCode([&] { m.Set("seed", "8"); }) == ErrorCode::kInvalidParams);
    CHECK(CaptureCode([&] { m.Set("empty", ""); }) == ErrorCode::kInvalidParams);
    CHECK(CaptureCode([&] { m.Set("a=b", "x"); }) == ErrorCode::kInvalidParams);
    CHECK(CaptureCode([&] { m.Set("k", "line\nbreak"); }) == ErrorCode::kInvalidParams);
    const Manifest back = Manifest::Parse(m.Serialize());
    CHECK(back.entries() == m.entries());
    REQUIRE(back.Get("seed"));
    CHECK(*back.Get("seed") == "7");
    CHECK(back.Get("nope") == nullptr);
    CHECK(LineOf([] { Manifest::Parse("a=1\na=2\n"); }) == 2);
    CHECK(CaptureCode([] { Manifest::Parse("novalue\n"); }) == ErrorCode::kMalformedLine);
  }

  TEST_CASE("class labels") {
    CHECK(ParseClassLabels("spk1\nspk2\r\n") == std::vector<std::string>{"spk1", "spk2"});
    CHECK(CaptureCode([] { ParseClassLabels("a\nb\na\n"); }) == ErrorCode::kMalformedLine);
  }
}
