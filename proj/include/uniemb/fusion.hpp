#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "uniemb/clspace.hpp"
#include "uniemb/matrix.hpp"

namespace uniemb {

enum class Side : int { kFirst = 1, kSecond = 2 };

struct FusionWeights {
  double w1 = 1.0;
  double w2 = 1.0;
};

// Shared reduced space of two encoders trained on one class set. The stacked
// map [l1; l2] (2l x rank) factors the Gram matrix of the stacked heads, so
// l1 l1^T = W1 W1^T, l2 l2^T = W2 W2^T and l1 l2^T = W1 W2^T at full rank.
struct FusionProjector {
  Matrix l1;  // (l x rank), encoder 1
  Matrix l2;  // (l x rank), encoder 2
  std::size_t rank = 0;
  std::pair<std::string, std::string> encoder_ids;
  FusionWeights default_weights;
  double eigen_energy = 1.0;
  // False when the heads carried no class labels and only N_class equality
  // could be checked. Not persisted.
  bool class_labels_verified = false;

  std::size_t input_dim() const noexcept { return l1.rows(); }
  const Matrix &block(Side side) const { return side == Side::kFirst ? l1 : l2; }
  const std::string &encoder_id(Side side) const {
    return side == Side::kFirst ? encoder_ids.first : encoder_ids.second;
  }
};

// Throws DimMismatch, ClassSetMismatch, RankOutOfRange, InvalidParams
// (bad weights) and decomposition errors. Absent rank picks the energy rule.
FusionProjector BuildFusionProjector(const ClassificationHead &head1,
                                     const ClassificationHead &head2,
                                     std::optional<std::size_t> rank = std::nullopt,
                                     FusionWeights weights = {});

Embedding ProjectSide(const FusionProjector &fp, Side side, const Embedding &e);

// w1 * (l1^T e1) + w2 * (l2^T e2). Throws DimMismatch, BothWeightsZero.
Embedding FuseWeighted(const FusionProjector &fp, const Embedding &e1,
                       const Embedding &e2, double w1, double w2);

}  // namespace uniemb
