#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniemb/archive.hpp"
#include "uniemb/clspace.hpp"
#include "uniemb/fusion.hpp"
#include "uniemb/matrix.hpp"
#include "uniemb/universal.hpp"

namespace uniemb {

namespace fs = std::filesystem;

// Binary formats. Every integer and float is little-endian.
//
//   UEMX  matrix      "UEMX" u32 version=1, u32 rows, u32 cols, rows*cols f64 row-major
//   UEPJ  projector   "UEPJ" u32 version=1, u8 method (0 cholesky, 1 eigen), u32 rank,
//                     f64 jitter, u16 len + encoder id, embedded UEMX l_map
//   UEFP  fusion      "UEFP" u32 version=1, u32 rank, f64 w1, f64 w2, f64 eigen_energy,
//                     u16 len + id1, u16 len + id2, embedded UEMX l1, embedded UEMX l2
//   UEEA  archive     "UEEA" u32 version=1, u64 count, u32 dim, then per record
//                     u16 len + id, f32 duration, dim*f64 values
inline constexpr std::uint32_t kFormatVersion = 1;

enum class FileKind { kMatrix, kProjector, kFusion, kArchive, kUnknown };

// Looks only at the magic bytes.
FileKind DetectFileKind(const fs::path &path);

std::vector<std::uint8_t> EncodeMatrix(const Matrix &m);
Matrix DecodeMatrix(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeProjector(const Projector &p);
Projector DecodeProjector(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeFusion(const FusionProjector &fp);
FusionProjector DecodeFusion(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeArchive(const EmbeddingArchive &a);
EmbeddingArchive DecodeArchive(std::span<const std::uint8_t> bytes);

void WriteMatrix(const fs::path &path, const Matrix &m);
Matrix ReadMatrix(const fs::path &path);
void WriteProjector(const fs::path &path, const Projector &p);
Projector ReadProjector(const fs::path &path);
void WriteFusion(const fs::path &path, const FusionProjector &fp);
FusionProjector ReadFusion(const fs::path &path);
void WriteArchive(const fs::path &path, const EmbeddingArchive &a);
EmbeddingArchive ReadArchive(const fs::path &path);

// One label per line.
std::vector<std::string> ParseClassLabels(std::string_view text);
std::vector<std::string> ReadClassLabels(const fs::path &path);
void WriteClassLabels(const fs::path &path, const std::vector<std::string> &labels);

// UEMX head plus optional label sidecar.
ClassificationHead ReadHead(const fs::path &matrix_path, std::string encoder_id,
                            const std::optional<fs::path> &labels_path = std::nullopt);

// Trial lists: enroll_id<TAB>test_id<TAB>{target|nontarget|unlabeled}.
TrialSet ParseTrials(std::string_view text);
TrialSet ReadTrials(const fs::path &path);
std::string FormatTrials(const TrialSet &trials);
void WriteTrials(const fs::path &path, const TrialSet &trials);

// Score files: enroll_id<TAB>test_id<TAB>score, 17 significant digits.
struct ScoreLine {
  std::string enroll_id;
  std::string test_id;
  double score = 0.0;
};
std::string FormatScores(const ScoredTrials &scores);
void WriteScores(const fs::path &path, const ScoredTrials &scores);
std::vector<ScoreLine> ParseScores(std::string_view text);
std::vector<ScoreLine> ReadScores(const fs::path &path);

// id<TAB>duration<TAB>v1 v2 ... vl. Dim comes from the first record.
EmbeddingArchive ParseTsvEmbeddings(std::string_view text);
EmbeddingArchive ImportTsvEmbeddings(const fs::path &path);
std::string FormatTsvEmbeddings(const EmbeddingArchive &a);

// key=value lines in insertion order.
class Manifest {
 public:
  // Throws InvalidParams on a duplicate key, empty value or illegal character.
  void Set(const std::string &key, const std::string &value);
  const std::string *Get(const std::string &key) const;
  const std::vector<std::pair<std::string, std::string>> &entries() const { return entries_; }

  std::string Serialize() const;
  static Manifest Parse(std::string_view text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

void WriteManifest(const fs::path &path, const Manifest &m);
Manifest ReadManifest(const fs::path &path);

// FNV-1a 64-bit of the file contents, as 16 hex digits.
std::string FileChecksum(const fs::path &path);

std::vector<std::uint8_t> ReadFileBytes(const fs::path &path);
std::string ReadTextFile(const fs::path &path);
// Writes to a sibling temporary file and renames it over `path`.
void AtomicWriteFile(const fs::path &path, std::span<const std::uint8_t> bytes);
void AtomicWriteFile(const fs::path &path, std::string_view text);

}  // namespace uniemb
