#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace uniemb {

// One utterance of one encoder. The duration is single precision because that
// is what the archive format stores.
struct ArchiveRecord {
  std::string id;
  float duration = 0.0f;  // seconds, > 0
  std::vector<double> values;
};

// Keyed collection of same-dimension embeddings, in insertion order.
class EmbeddingArchive {
 public:
  explicit EmbeddingArchive(std::size_t dim);

  // Throws DuplicateUtteranceId, InconsistentDim, NonPositiveDuration, NonFinite.
  void Add(std::string id, float duration, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<ArchiveRecord> &records() const noexcept { return records_; }
  const ArchiveRecord &operator[](std::size_t i) const { return records_[i]; }
  // nullptr when absent.
  const ArchiveRecord *Find(const std::string &id) const;

 private:
  std::size_t dim_;
  std::vector<ArchiveRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace uniemb
