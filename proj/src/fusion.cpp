#include "uniemb/fusion.hpp"

#include <cmath>
#include <string>

#include "uniemb/decompose.hpp"
#include "uniemb/error.hpp"

namespace uniemb {

FusionProjector BuildFusionProjector(const ClassificationHead &head1,
                                     const ClassificationHead &head2,
                                     std::optional<std::size_t> rank,
                                     FusionWeights weights) {
  const std::size_t l = head1.embedding_dim();
  if (head2.embedding_dim() != l)
    throw Error(ErrorCode::kDimMismatch,
                "head embedding dims differ: " + std::to_string(l) + " vs " +
                    std::to_string(head2.embedding_dim()));
  if (head1.num_classes() != head2.num_classes())
    throw Error(ErrorCode::kClassSetMismatch,
                "class counts differ: " + std::to_string(head1.num_classes()) + " vs " +
                    std::to_string(head2.num_classes()));
  const bool labelled = head1.class_labels() && head2.class_labels();
  if (labelled && *head1.class_labels() != *head2.class_labels())
    throw Error(ErrorCode::kClassSetMismatch, "class label sequences differ");
  if (!std::isfinite(weights.w1) || !std::isfinite(weights.w2))
    throw Error(ErrorCode::kInvalidParams, "fusion weights must be finite");
  if (weights.w1 == 0.0 && weights.w2 == 0.0)
    throw Error(ErrorCode::kBothWeightsZero, "fusion weights are both zero");
  if (rank && (*rank < 1 || *rank > 2 * l))
    throw Error(ErrorCode::kRankOutOfRange,
                "rank " + std::to_string(*rank) + " outside [1, " + std::to_string(2 * l) + "]");

  const Matrix stacked = VStack(head1.w(), head2.w());
  const EigenDecomposition eig = SymEig(MatMulTransB(stacked, stacked));
  const std::size_t r =
      rank ? *rank : EnergyRank(eig.values, kDefaultEnergyFraction, kDefaultRankCap);
  const Matrix map = Transpose(TruncatedRoot(eig, r));  // (2l x r)

  FusionProjector fp{.l1 = RowBlock(map, 0, l),
                     .l2 = RowBlock(map, l, 2 * l),
                     .rank = r,
                     .encoder_ids = {head1.encoder_id(), head2.encoder_id()},
                     .default_weights = weights,
                     .eigen_energy = RetainedEnergy(eig.values, r),
                     .class_labels_verified = labelled};
  return fp;
}

Embedding ProjectSide(const FusionProjector &fp, Side side, const Embedding &e) {
  if (e.dim() != fp.input_dim())
    throw Error(ErrorCode::kDimMismatch,
                "embedding dim " + std::to_string(e.dim()) + " vs fusion input " +
                    std::to_string(fp.input_dim()));
  return Embedding(MatTVec(fp.block(side), e.values()));
}

Embedding FuseWeighted(const FusionProjector &fp, const Embedding &e1,
                       const Embedding &e2, double w1, double w2) {
  if (w1 == 0.0 && w2 == 0.0)
    throw Error(ErrorCode::kBothWeightsZero, "fusion weights are both zero");
  if (!std::isfinite(w1) || !std::isfinite(w2))
    throw Error(ErrorCode::kInvalidParams, "fusion weights must be finite");
  const Embedding y1 = ProjectSide(fp, Side::kFirst, e1);
  const Embedding y2 = ProjectSide(fp, Side::kSecond, e2);
  std::vector<double> out(fp.rank);
  for (std::size_t i = 0; i < fp.rank; ++i) out[i] = w1 * y1[i] + w2 * y2[i];
  return Embedding(std::move(out));
}

}  // namespace uniemb
