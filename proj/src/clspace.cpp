#include "uniemb/clspace.hpp"

#include <cmath>
#include <set>
#include <string>

#include "uniemb/error.hpp"

namespace uniemb {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::kDimMismatch, "embedding of dimension 0");
  for (double x : values_)
    if (!std::isfinite(x)) throw Error(ErrorCode::kNonFinite, "non-finite embedding value");
}

ClassificationHead::ClassificationHead(Matrix w, std::string encoder_id,
                                       std::optional<std::vector<std::string>> class_labels)
    : w_(std::move(w)),
      encoder_id_(std::move(encoder_id)),
      class_labels_(std::move(class_labels)) {
  if (class_labels_) {
    if (class_labels_->size() != w_.cols())
      throw Error(ErrorCode::kClassSetMismatch,
                  std::to_string(class_labels_->size()) + " labels for " +
                      std::to_string(w_.cols()) + " classes");
    std::set<std::string> seen(class_labels_->begin(), class_labels_->end());
    if (seen.size() != class_labels_->size())
      throw Error(ErrorCode::kClassSetMismatch, "duplicate class label");
  }
}

const char *MethodName(ProjectorMethod m) {
  return m == ProjectorMethod::kCholesky ? "cholesky" : "eigen";
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::kDimMismatch, "cosine of dims " + std::to_string(a.size()) +
                                             " and " + std::to_string(b.size()));
  const double na = Norm(a), nb = Norm(b);
  if (!(na > 1e-300) || !(nb > 1e-300))
    throw Error(ErrorCode::kZeroVector, "cosine with a zero vector");
  return Dot(a, b) / (na * nb);
}

double Cosine(const Embedding &a, const Embedding &b) {
  return Cosine(a.values(), b.values());
}

Embedding ClEmbed(const ClassificationHead &head, const Embedding &e) {
  if (e.dim() != head.embedding_dim())
    throw Error(ErrorCode::kDimMismatch,
                "embedding dim " + std::to_string(e.dim()) + " vs head dim " +
                    std::to_string(head.embedding_dim()));
  return Embedding(MatTVec(head.w(), e.values()));
}

Matrix HeadGram(const ClassificationHead &head) {
  return MatMulTransB(head.w(), head.w());
}

Projector BuildProjector(const ClassificationHead &head, ProjectorMethod method,
                         std::optional<std::size_t> rank, const JitterPolicy &jitter) {
  const std::size_t l = head.embedding_dim();
  const Matrix gram = HeadGram(head);

  Projector p{.l_map = Matrix(1, 1),
              .method = method,
              .source_encoder_id = head.encoder_id(),
              .rank = 0,
              .applied_jitter = 0.0};
  if (method == ProjectorMethod::kCholesky) {
    if (rank && *rank != l)
      throw Error(ErrorCode::kRankOutOfRange,
                  "cholesky projector is full rank (" + std::to_string(l) +
                      "), requested " + std::to_string(*rank));
    CholeskyResult chol = Cholesky(gram, jitter);
    p.l_map = std::move(chol.lower);
    p.rank = l;
    p.applied_jitter = chol.jitter;
    return p;
  }

  if (rank && (*rank < 1 || *rank > l))
    throw Error(ErrorCode::kRankOutOfRange,
                "rank " + std::to_string(*rank) + " outside [1, " + std::to_string(l) + "]");
  const EigenDecomposition eig = SymEig(gram);
  const std::size_t r = rank ? *rank : EnergyRank(eig.values, kDefaultEnergyFraction,
                                                  kDefaultRankCap);
  p.l_map = Transpose(TruncatedRoot(eig, r));
  p.rank = r;
  return p;
}

Embedding Project(const Projector &p, const Embedding &e) {
  if (e.dim() != p.input_dim())
    throw Error(ErrorCode::kDimMismatch,
                "embedding dim " + std::to_string(e.dim()) + " vs projector input " +
                    std::to_string(p.input_dim()));
  return Embedding(MatTVec(p.l_map, e.values()));
}

}  // namespace uniemb
