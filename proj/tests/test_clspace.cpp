#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "uniemb/clspace.hpp"
#include "uniemb/decompose.hpp"

using namespace uniemb;
using namespace uniemb::testing;

namespace {

ClassificationHead RandomHead(std::size_t l, std::size_t n, std::mt19937_64 &gen) {
  return ClassificationHead(RandomMatrix(l, n, gen), "enc");
}

double MaxCosineDeviation(const ClassificationHead &head, const Projector &p,
                          const std::vector<std::pair<Embedding, Embedding>> &pairs) {
  double worst = 0.0;
  for (const auto &[a, b] : pairs) {
    const double ref = RefCosine(RefClEmbed(head.w(), a.values()),
                                 RefClEmbed(head.w(), b.values()));
    worst = std::max(worst, std::abs(Cosine(Project(p, a), Project(p, b)) - ref));
  }
  return worst;
}

}  // namespace

TEST_CASE("embedding invariants") {
  CHECK(CaptureCode([] { Embedding(std::vector<double>{}); }) == ErrorCode::kDimMismatch);
  CHECK(CaptureCode([] { Embedding({1.0, NAN}); }) == ErrorCode::kNonFinite);
  CHECK(CaptureCode([] { Embedding({INFINITY}); }) == ErrorCode::kNonFinite);
}

TEST_CASE("head invariants") {
  CHECK(CaptureCode([] {
          ClassificationHead(Matrix(2, 3), "x", std::vector<std::string>{"a", "b"});
        }) == ErrorCode::kClassSetMismatch);
  CHECK(CaptureCode([] {
          ClassificationHead(Matrix(2, 3), "x", std::vector<std::string>{"a", "b", "a"});
        }) == ErrorCode::kClassSetMismatch);
  const ClassificationHead h(Matrix(2, 3), "x");
  CHECK(h.embedding_dim() == 2);
  CHECK(h.num_classes() == 3);
}

TEST_SUITE("cosine") {
  TEST_CASE("examples") {
    const Embedding v({0.3, -1.2, 4.0});
    CHECK(Cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Cosine(Embedding({1, 0}), Embedding({0, 1})) == 0.0);
    CHECK(std::abs(Cosine(Embedding({1, 0}), Embedding({1, 1})) - 0.7071067811865475) < 1e-15);
  }

  TEST_CASE("errors") {
    CHECK(CaptureCode([] { Cosine(Embedding({1, 0}), Embedding({1, 0, 0})); }) ==
          ErrorCode::kDimMismatch);
    CHECK(CaptureCode([] { Cosine(Embedding({0, 0}), Embedding({1, 0})); }) ==
          ErrorCode::kZeroVector);
  }

  TEST_CASE("scale invariance") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> a = RandomVector(16, gen), b = RandomVector(16, gen);
      const double base = Cosine(a, b);
      const double alpha = scale(gen), beta = scale(gen);
      for (double &x : a) x *= alpha;
      for (double &x : b) x *= beta;
      CHECK(std::abs(Cosine(a, b) - base) < 1e-12);
    }
  }
}

TEST_SUITE("cl_embed") {
  TEST_CASE("examples") {
    const ClassificationHead identity(Matrix::Identity(3), "id");
    const Embedding e({1.5, -2, 0.25});
    CHECK(ClEmbed(identity, e) == e);

    const ClassificationHead w(Matrix{{1, 0, 1}, {0, 1, 1}}, "w");
    CHECK(ClEmbed(w, Embedding({1, 2})) == Embedding({1, 2, 3}));
    CHECK(ClEmbed(w, Embedding({0, 0})) == Embedding({0, 0, 0}));
    CHECK(CaptureCode([&] { ClEmbed(w, Embedding({1, 2, 3})); }) == ErrorCode::kDimMismatch);
  }
}

TEST_SUITE("build_projector") {
  TEST_CASE("identity head") {
    const ClassificationHead h(Matrix::Identity(3), "id");
    for (auto m : {ProjectorMethod::kCholesky, ProjectorMethod::kEigen}) {
      const Projector p = BuildProjector(h, m, 3);
      CHECK(p.l_map == Matrix::Identity(3));
      CHECK(p.rank == 3);
      CHECK(p.method == m);
      CHECK(p.source_encoder_id == "id");
      CHECK(p.applied_jitter == 0.0);
    }
  }

  TEST_CASE("diag(3,2) eigen at rank 1") {
    const ClassificationHead h(Matrix{{3, 0}, {0, 2}}, "d");
    const Projector p = BuildProjector(h, ProjectorMethod::kEigen, 1);
    REQUIRE(p.l_map.rows() == 2);
    REQUIRE(p.l_map.cols() == 1);
    CHECK(std::abs(p.l_map(0, 0)) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(p.l_map(1, 0) == 0.0);
  }

  TEST_CASE("random 4x16 head, cholesky recomposition") {
    std::mt19937_64 gen(5);
    const ClassificationHead h = RandomHead(4, 16, gen);
    const Projector p = BuildProjector(h, ProjectorMethod::kCholesky);
    const Matrix gram = NaiveProduct(h.w(), h.w(), true);
    CHECK(RelFrobError(MatMulTransB(p.l_map, p.l_map), gram) < 1e-9);
  }

  TEST_CASE("both methods recompose at full rank") {
    std::mt19937_64 gen(6);
    for (std::size_t l : {2u, 9u, 32u}) {
      const ClassificationHead h = RandomHead(l, 4 * l, gen);
      const Matrix gram = NaiveProduct(h.w(), h.w(), true);
      for (auto m : {ProjectorMethod::kCholesky, ProjectorMethod::kEigen}) {
        const Projector p = BuildProjector(h, m, l);
        CHECK(RelFrobError(MatMulTransB(p.l_map, p.l_map), gram) < 1e-9);
      }
    }
  }

  TEST_CASE("rank constraints") {
    std::mt19937_64 gen(8);
    const ClassificationHead h = RandomHead(6, 20, gen);
    CHECK(CaptureCode([&] { BuildProjector(h, ProjectorMethod::kCholesky, 3); }) ==
          ErrorCode::kRankOutOfRange);
    CHECK(CaptureCode([&] { BuildProjector(h, ProjectorMethod::kEigen, 0); }) ==
          ErrorCode::kRankOutOfRange);
    CHECK(CaptureCode([&] { BuildProjector(h, ProjectorMethod::kEigen, 7); }) ==
          ErrorCode::kRankOutOfRange);
  }

  TEST_CASE("default eigen rank follows the energy rule") {
    // A = diag(100, 9, 0.01): energy 100/109.01 < 0.99, 109/109.01 >= 0.99.
    const ClassificationHead h(Matrix{{10, 0, 0}, {0, 3, 0}, {0, 0, 0.1}}, "e");
    const Projector p = BuildProjector(h, ProjectorMethod::kEigen);
    CHECK(p.rank == 2);
    CHECK(p.l_map.cols() == 2);
  }

  TEST_CASE("rank-deficient head needs jitter for cholesky") {
    // l = 3 but only 2 classes: W W^T is singular.
    std::mt19937_64 gen(9);
    const ClassificationHead h = RandomHead(3, 2, gen);
    const Projector p = BuildProjector(h, ProjectorMethod::kCholesky);
    CHECK(p.applied_jitter > 0.0);
    CHECK(CaptureCode([&] {
            BuildProjector(h, ProjectorMethod::kCholesky, std::nullopt, JitterPolicy::Forbid());
          }) == ErrorCode::kRankDeficient);
  }
}

TEST_SUITE("project") {
  TEST_CASE("examples") {
    const Projector id = BuildProjector(ClassificationHead(Matrix::Identity(2), "i"),
                                        ProjectorMethod::kCholesky);
    CHECK(Project(id, Embedding({0.5, 7})) == Embedding({0.5, 7}));

    const Projector p{.l_map = Matrix{{2, 0}, {1, std::sqrt(2.0)}},
                      .method = ProjectorMethod::kCholesky,
                      .source_encoder_id = "hand",
                      .rank = 2,
                      .applied_jitter = 0.0};
    CHECK(Project(p, Embedding({1, 0})) == Embedding({2, 0}));
    CHECK(Project(p, Embedding({0, 0})) == Embedding({0, 0}));
    CHECK(CaptureCode([&] { Project(p, Embedding({1, 0, 0})); }) == ErrorCode::kDimMismatch);
  }
}

TEST_SUITE("score preservation") {
  TEST_CASE("cosine, norm and dot product survive full-rank projection") {
    std::mt19937_64 gen(21);
    for (int h_i = 0; h_i < 4; ++h_i) {
      const std::size_t l = 16;
      const ClassificationHead h = RandomHead(l, 128, gen);
      for (auto m : {ProjectorMethod::kCholesky, ProjectorMethod::kEigen}) {
        const Projector p = BuildProjector(h, m, l);
        for (int k = 0; k < 50; ++k) {
          const Embedding a = RandomEmbedding(l, gen), b = RandomEmbedding(l, gen);
          const auto ca = RefClEmbed(h.w(), a.values()), cb = RefClEmbed(h.w(), b.values());
          const Embedding ya = Project(p, a), yb = Project(p, b);
          CHECK(std::abs(Cosine(ya, yb) - RefCosine(ca, cb)) < 1e-8);

          double dot_c = 0, dot_y = 0, nc = 0, ny = 0;
          for (std::size_t i = 0; i < ca.size(); ++i) {
            dot_c += ca[i] * cb[i];
            nc += ca[i] * ca[i];
          }
          for (std::size_t i = 0; i < ya.dim(); ++i) {
            dot_y += ya[i] * yb[i];
            ny += ya[i] * ya[i];
          }
          CHECK(std::abs(ny - nc) <= 1e-8 * nc);
          CHECK(std::abs(dot_y - dot_c) <= 1e-8 * std::sqrt(nc) * std::sqrt(ny));
        }
      }
    }
  }

  TEST_CASE("eigen deviation is non-increasing in rank") {
    std::mt19937_64 gen(22);
    const std::size_t l = 24;
    const ClassificationHead h = RandomHead(l, 200, gen);
    std::vector<std::pair<Embedding, Embedding>> pairs;
    for (int k = 0; k < 100; ++k)
      pairs.emplace_back(RandomEmbedding(l, gen), RandomEmbedding(l, gen));
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r : {1u, 2u, 4u, 8u, 12u, 16u, 20u, 24u}) {
      const double dev = MaxCosineDeviation(h, BuildProjector(h, ProjectorMethod::kEigen, r), pairs);
      CHECK(dev <= prev);
      prev = dev;
    }
    CHECK(prev < 1e-8);
  }
}
