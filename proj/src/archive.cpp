#include "uniemb/archive.hpp"

#include <cmath>

#include "uniemb/error.hpp"

namespace uniemb {

EmbeddingArchive::EmbeddingArchive(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::kInconsistentDim, "archive dimension must be >= 1");
}

void EmbeddingArchive::Add(std::string id, float duration, std::vector<double> values) {
  if (id.empty()) throw Error(ErrorCode::kInvalidParams, "empty utterance id");
  if (values.size() != dim_)
    throw Error(ErrorCode::kInconsistentDim,
                "utterance '" + id + "' has dim " + std::to_string(values.size()) +
                    ", archive dim is " + std::to_string(dim_));
  if (!std::isfinite(duration) || !(duration > 0.0f))
    throw Error(ErrorCode::kNonPositiveDuration,
                "utterance '" + id + "' has duration " + std::to_string(duration));
  for (double v : values)
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFinite, "utterance '" + id + "' has a non-finite value");
  if (index_.count(id))
    throw Error(ErrorCode::kDuplicateUtteranceId, "duplicate utterance id '" + id + "'");
  index_.emplace(id, records_.size());
  records_.push_back({std::move(id), duration, std::move(values)});
}

const ArchiveRecord *EmbeddingArchive::Find(const std::string &id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

}  // namespace uniemb
