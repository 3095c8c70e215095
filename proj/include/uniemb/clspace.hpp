#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uniemb/decompose.hpp"
#include "uniemb/matrix.hpp"

namespace uniemb {

// A speaker embedding, cl-embedding or projected embedding. Finite values,
// dimension >= 1. No length normalization is ever applied implicitly.
class Embedding {
 public:
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding &, const Embedding &) = default;

 private:
  std::vector<double> values_;
};

// Final classification layer of an encoder: w is (l x N_class), column j is
// the weight vector of training class j.
class ClassificationHead {
 public:
  ClassificationHead(Matrix w, std::string encoder_id,
                     std::optional<std::vector<std::string>> class_labels = std::nullopt);

  const Matrix &w() const noexcept { return w_; }
  const std::string &encoder_id() const noexcept { return encoder_id_; }
  const std::optional<std::vector<std::string>> &class_labels() const noexcept {
    return class_labels_;
  }
  std::size_t embedding_dim() const noexcept { return w_.rows(); }
  std::size_t num_classes() const noexcept { return w_.cols(); }

 private:
  Matrix w_;
  std::string encoder_id_;
  std::optional<std::vector<std::string>> class_labels_;
};

enum class ProjectorMethod : unsigned char { kCholesky = 0, kEigen = 1 };

const char *MethodName(ProjectorMethod m);

// Linear map y = l_map^T e with l_map * l_map^T ~= W W^T.
struct Projector {
  Matrix l_map;  // (l x rank)
  ProjectorMethod method = ProjectorMethod::kEigen;
  std::string source_encoder_id;
  std::size_t rank = 0;
  double applied_jitter = 0.0;

  std::size_t input_dim() const noexcept { return l_map.rows(); }
};

// Eigenvalue energy retained by the default reduced rank.
inline constexpr double kDefaultEnergyFraction = 0.99;
// Upper bound on the default reduced rank.
inline constexpr std::size_t kDefaultRankCap = 256;

// a^T b / (|a| |b|). Throws DimMismatch, ZeroVector.
double Cosine(const Embedding &a, const Embedding &b);
double Cosine(std::span<const double> a, std::span<const double> b);

// c = W^T e. Throws DimMismatch.
Embedding ClEmbed(const ClassificationHead &head, const Embedding &e);

// W W^T (l x l).
Matrix HeadGram(const ClassificationHead &head);

// Cholesky (full rank only) or eigen (any rank in [1, l]; energy rule when
// rank is absent). Throws RankOutOfRange plus decomposition errors.
Projector BuildProjector(const ClassificationHead &head, ProjectorMethod method,
                         std::optional<std::size_t> rank = std::nullopt,
                         const JitterPolicy &jitter = {});

// y = l_map^T e. Throws DimMismatch.
Embedding Project(const Projector &p, const Embedding &e);

}  // namespace uniemb
