#include "uniemb/storage.hpp"

#include <unistd.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "uniemb/error.hpp"

namespace uniemb {

namespace {

constexpr char kMatrixMagic[4] = {'U', 'E', 'M', 'X'};
constexpr char kProjectorMagic[4] = {'U', 'E', 'P', 'J'};
constexpr char kFusionMagic[4] = {'U', 'E', 'F', 'P'};
constexpr char kArchiveMagic[4] = {'U', 'E', 'E', 'A'};

class ByteWriter {
 public:
  void Magic(const char (&m)[4]) { buf_.insert(buf_.end(), m, m + 4); }
  void U8(std::uint8_t x) { buf_.push_back(x); }
  void U16(std::uint16_t x) { Le(x, 2); }
  void U32(std::uint32_t x) { Le(x, 4); }
  void U64(std::uint64_t x) { Le(x, 8); }
  void F32(float x) { Le(std::bit_cast<std::uint32_t>(x), 4); }
  void F64(double x) { Le(std::bit_cast<std::uint64_t>(x), 8); }
  void Str(const std::string &s) {
    if (s.size() > 0xffff) throw Error(ErrorCode::kInvalidParams, "string longer than 65535 bytes");
    U16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void Bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> Take() { return std::move(buf_); }

 private:
  void Le(std::uint64_t x, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  void Need(std::size_t n, const char *what) const {
    if (remaining() < n)
      throw Error(ErrorCode::kTruncatedFile, std::string("truncated while reading ") + what +
                                                 " at byte " + std::to_string(pos_));
  }
  void Magic(const char (&m)[4], const char *format) {
    Need(4, "magic");
    if (std::memcmp(b_.data() + pos_, m, 4) != 0)
      throw Error(ErrorCode::kBadMagic, std::string("not a ") + format + " file (byte " +
                                            std::to_string(pos_) + ")");
    pos_ += 4;
    const std::uint32_t version = U32("version");
    if (version != kFormatVersion)
      throw Error(ErrorCode::kUnsupportedVersion,
                  std::string(format) + " version " + std::to_string(version));
  }
  std::uint8_t U8(const char *what) { return static_cast<std::uint8_t>(Le(1, what)); }
  std::uint16_t U16(const char *what) { return static_cast<std::uint16_t>(Le(2, what)); }
  std::uint32_t U32(const char *what) { return static_cast<std::uint32_t>(Le(4, what)); }
  std::uint64_t U64(const char *what) { return Le(8, what); }
  float F32(const char *what) { return std::bit_cast<float>(U32(what)); }
  double F64(const char *what) { return std::bit_cast<double>(U64(what)); }
  std::string Str(const char *what) {
    const std::size_t n = U16(what);
    Need(n, what);
    std::string s(reinterpret_cast<const char *>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void End(const char *format) const {
    if (remaining() != 0)
      throw Error(ErrorCode::kTrailingData, std::to_string(remaining()) +
                                                " unexpected bytes after " + format + " data");
  }

 private:
  std::uint64_t Le(int n, const char *what) {
    Need(static_cast<std::size_t>(n), what);
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return x;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void PutMatrix(ByteWriter &w, const Matrix &m) {
  if (m.rows() > 0xffffffffu || m.cols() > 0xffffffffu)
    throw Error(ErrorCode::kInvalidParams, "matrix too large for UEMX");
  w.Magic(kMatrixMagic);
  w.U32(kFormatVersion);
  w.U32(static_cast<std::uint32_t>(m.rows()));
  w.U32(static_cast<std::uint32_t>(m.cols()));
  for (double x : m.data()) w.F64(x);
}

Matrix GetMatrix(ByteReader &r) {
  r.Magic(kMatrixMagic, "UEMX");
  const std::uint64_t rows = r.U32("rows");
  const std::uint64_t cols = r.U32("cols");
  if (rows == 0 || cols == 0)
    throw Error(ErrorCode::kInconsistentDim, "matrix with a zero dimension");
  // rows * cols < 2^64; compare before allocating.
  if (rows * cols > r.remaining() / 8)
    throw Error(ErrorCode::kTruncatedFile,
                "matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " exceeds the remaining " + std::to_string(r.remaining()) + " bytes");
  std::vector<double> data(rows * cols);
  for (double &x : data) x = r.F64("matrix data");
  return Matrix(rows, cols, std::move(data));
}

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Calls fn(line, 1-based number) for every non-empty line.
template <typename Fn>
void ForEachLine(std::string_view text, Fn fn) {
  std::size_t number = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    line = StripCr(line);
    if (line.empty()) continue;
    fn(line, number);
  }
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

bool ParseDouble(std::string_view s, double *out) {
  if (s.empty()) return false;
  const char *first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string FormatG17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

FileKind DetectFileKind(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  char m[4] = {};
  if (!in.read(m, 4)) return FileKind::kUnknown;
  if (!std::memcmp(m, kMatrixMagic, 4)) return FileKind::kMatrix;
  if (!std::memcmp(m, kProjectorMagic, 4)) return FileKind::kProjector;
  if (!std::memcmp(m, kFusionMagic, 4)) return FileKind::kFusion;
  if (!std::memcmp(m, kArchiveMagic, 4)) return FileKind::kArchive;
  return FileKind::kUnknown;
}

std::vector<std::uint8_t> EncodeMatrix(const Matrix &m) {
  ByteWriter w;
  PutMatrix(w, m);
  return w.Take();
}

Matrix DecodeMatrix(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Matrix m = GetMatrix(r);
  r.End("UEMX");
  return m;
}

std::vector<std::uint8_t> EncodeProjector(const Projector &p) {
  ByteWriter w;
  w.Magic(kProjectorMagic);
  w.U32(kFormatVersion);
  w.U8(static_cast<std::uint8_t>(p.method));
  w.U32(static_cast<std::uint32_t>(p.rank));
  w.F64(p.applied_jitter);
  w.Str(p.source_encoder_id);
  PutMatrix(w, p.l_map);
  return w.Take();
}

Projector DecodeProjector(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.Magic(kProjectorMagic, "UEPJ");
  const std::uint8_t method = r.U8("method");
  if (method > 1)
    throw Error(ErrorCode::kInvalidParams, "unknown projector method " + std::to_string(method));
  const std::uint32_t rank = r.U32("rank");
  const double jitter = r.F64("jitter");
  std::string encoder_id = r.Str("encoder id");
  Projector p{.l_map = GetMatrix(r),
              .method = static_cast<ProjectorMethod>(method),
              .source_encoder_id = std::move(encoder_id),
              .rank = rank,
              .applied_jitter = jitter};
  r.End("UEPJ");
  if (p.l_map.cols() != p.rank || p.rank > p.l_map.rows())
    throw Error(ErrorCode::kInconsistentDim, "projector rank does not match its matrix");
  if (p.method == ProjectorMethod::kCholesky && p.rank != p.l_map.rows())
    throw Error(ErrorCode::kInconsistentDim, "cholesky projector must be full rank");
  return p;
}

std::vector<std::uint8_t> EncodeFusion(const FusionProjector &fp) {
  ByteWriter w;
  w.Magic(kFusionMagic);
  w.U32(kFormatVersion);
  w.U32(static_cast<std::uint32_t>(fp.rank));
  w.F64(fp.default_weights.w1);
  w.F64(fp.default_weights.w2);
  w.F64(fp.eigen_energy);
  w.Str(fp.encoder_ids.first);
  w.Str(fp.encoder_ids.second);
  PutMatrix(w, fp.l1);
  PutMatrix(w, fp.l2);
  return w.Take();
}

FusionProjector DecodeFusion(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.Magic(kFusionMagic, "UEFP");
  const std::uint32_t rank = r.U32("rank");
  const double w1 = r.F64("w1");
  const double w2 = r.F64("w2");
  const double energy = r.F64("eigen energy");
  std::string id1 = r.Str("encoder id 1");
  std::string id2 = r.Str("encoder id 2");
  Matrix l1 = GetMatrix(r);
  Matrix l2 = GetMatrix(r);
  FusionProjector fp{.l1 = std::move(l1),
                     .l2 = std::move(l2),
                     .rank = rank,
                     .encoder_ids = {std::move(id1), std::move(id2)},
                     .default_weights = {w1, w2},
                     .eigen_energy = energy,
                     .class_labels_verified = false};
  r.End("UEFP");
  if (fp.l1.rows() != fp.l2.rows() || fp.l1.cols() != fp.l2.cols() || fp.l1.cols() != fp.rank ||
      fp.rank > 2 * fp.l1.rows())
    throw Error(ErrorCode::kInconsistentDim, "fusion blocks do not match the stored rank");
  if (!std::isfinite(fp.default_weights.w1) || !std::isfinite(fp.default_weights.w2) ||
      (fp.default_weights.w1 == 0.0 && fp.default_weights.w2 == 0.0))
    throw Error(ErrorCode::kInvalidParams, "invalid stored fusion weights");
  return fp;
}

std::vector<std::uint8_t> EncodeArchive(const EmbeddingArchive &a) {
  ByteWriter w;
  w.Magic(kArchiveMagic);
  w.U32(kFormatVersion);
  w.U64(a.size());
  w.U32(static_cast<std::uint32_t>(a.dim()));
  for (const ArchiveRecord &rec : a.records()) {
    w.Str(rec.id);
    w.F32(rec.duration);
    for (double x : rec.values) w.F64(x);
  }
  return w.Take();
}

EmbeddingArchive DecodeArchive(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.Magic(kArchiveMagic, "UEEA");
  const std::uint64_t count = r.U64("record count");
  const std::uint64_t dim = r.U32("dim");
  if (dim == 0) throw Error(ErrorCode::kInconsistentDim, "archive with dim 0");
  // Smallest possible record: 1-byte id.
  const std::uint64_t min_record = 2 + 1 + 4 + 8 * dim;
  if (count > r.remaining() / min_record)
    throw Error(ErrorCode::kTruncatedFile,
                std::to_string(count) + " records cannot fit in " +
                    std::to_string(r.remaining()) + " bytes");
  EmbeddingArchive a(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.Str("utterance id");
    const float duration = r.F32("duration");
    r.Need(8 * dim, "embedding values");
    std::vector<double> values(dim);
    for (double &x : values) x = r.F64("embedding values");
    a.Add(std::move(id), duration, std::move(values));
  }
  r.End("UEEA");
  return a;
}

void WriteMatrix(const fs::path &path, const Matrix &m) { AtomicWriteFile(path, EncodeMatrix(m)); }
Matrix ReadMatrix(const fs::path &path) { return DecodeMatrix(ReadFileBytes(path)); }
void WriteProjector(const fs::path &path, const Projector &p) {
  AtomicWriteFile(path, EncodeProjector(p));
}
Projector ReadProjector(const fs::path &path) { return DecodeProjector(ReadFileBytes(path)); }
void WriteFusion(const fs::path &path, const FusionProjector &fp) {
  AtomicWriteFile(path, EncodeFusion(fp));
}
FusionProjector ReadFusion(const fs::path &path) { return DecodeFusion(ReadFileBytes(path)); }
void WriteArchive(const fs::path &path, const EmbeddingArchive &a) {
  AtomicWriteFile(path, EncodeArchive(a));
}
EmbeddingArchive ReadArchive(const fs::path &path) { return DecodeArchive(ReadFileBytes(path)); }

std::vector<std::string> ParseClassLabels(std::string_view text) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  ForEachLine(text, [&](std::string_view line, std::size_t number) {
    std::string label(line);
    if (!seen.insert(label).second)
      throw Error(ErrorCode::kMalformedLine, "duplicate class label '" + label + "'", number);
    labels.push_back(std::move(label));
  });
  return labels;
}

std::vector<std::string> ReadClassLabels(const fs::path &path) {
  return ParseClassLabels(ReadTextFile(path));
}

void WriteClassLabels(const fs::path &path, const std::vector<std::string> &labels) {
  std::string text;
  for (const auto &l : labels) text += l + "\n";
  AtomicWriteFile(path, text);
}

ClassificationHead ReadHead(const fs::path &matrix_path, std::string encoder_id,
                            const std::optional<fs::path> &labels_path) {
  Matrix w = ReadMatrix(matrix_path);
  std::optional<std::vector<std::string>> labels;
  if (labels_path) labels = ReadClassLabels(*labels_path);
  return ClassificationHead(std::move(w), std::move(encoder_id), std::move(labels));
}

TrialSet ParseTrials(std::string_view text) {
  TrialSet trials;
  ForEachLine(text, [&](std::string_view line, std::size_t number) {
    const auto f = SplitTabs(line);
    if (f.size() != 3)
      throw Error(ErrorCode::kMalformedLine,
                  "expected 3 tab-separated fields, got " + std::to_string(f.size()), number);
    if (f[0].empty() || f[1].empty())
      throw Error(ErrorCode::kMalformedLine, "empty utterance id", number);
    TrialLabel label;
    if (f[2] == "target") label = TrialLabel::kTarget;
    else if (f[2] == "nontarget") label = TrialLabel::kNontarget;
    else if (f[2] == "unlabeled") label = TrialLabel::kUnlabeled;
    else
      throw Error(ErrorCode::kMalformedLine, "unknown label '" + std::string(f[2]) + "'", number);
    trials.push_back({std::string(f[0]), std::string(f[1]), label});
  });
  return trials;
}

TrialSet ReadTrials(const fs::path &path) { return ParseTrials(ReadTextFile(path)); }

std::string FormatTrials(const TrialSet &trials) {
  std::string out;
  for (const Trial &t : trials) {
    out += t.enroll_id;
    out += '\t';
    out += t.test_id;
    out += '\t';
    out += TrialLabelName(t.label);
    out += '\n';
  }
  return out;
}

void WriteTrials(const fs::path &path, const TrialSet &trials) {
  AtomicWriteFile(path, FormatTrials(trials));
}

std::string FormatScores(const ScoredTrials &scores) {
  std::string out;
  out.reserve(scores.size() * 48);
  for (const ScoredTrial &s : scores) {
    out += s.trial.enroll_id;
    out += '\t';
    out += s.trial.test_id;
    out += '\t';
    out += FormatG17(s.score);
    out += '\n';
  }
  return out;
}

void WriteScores(const fs::path &path, const ScoredTrials &scores) {
  AtomicWriteFile(path, FormatScores(scores));
}

std::vector<ScoreLine> ParseScores(std::string_view text) {
  std::vector<ScoreLine> out;
  ForEachLine(text, [&](std::string_view line, std::size_t number) {
    const auto f = SplitTabs(line);
    if (f.size() != 3)
      throw Error(ErrorCode::kMalformedLine,
                  "expected 3 tab-separated fields, got " + std::to_string(f.size()), number);
    ScoreLine s{std::string(f[0]), std::string(f[1]), 0.0};
    if (s.enroll_id.empty() || s.test_id.empty())
      throw Error(ErrorCode::kMalformedLine, "empty utterance id", number);
    if (!ParseDouble(f[2], &s.score) || !std::isfinite(s.score))
      throw Error(ErrorCode::kMalformedLine, "bad score '" + std::string(f[2]) + "'", number);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<ScoreLine> ReadScores(const fs::path &path) { return ParseScores(ReadTextFile(path)); }

EmbeddingArchive ParseTsvEmbeddings(std::string_view text) {
  std::optional<EmbeddingArchive> archive;
  ForEachLine(text, [&](std::string_view line, std::size_t number) {
    const auto f = SplitTabs(line);
    if (f.size() != 3)
      throw Error(ErrorCode::kMalformedLine,
                  "expected id<TAB>duration<TAB>values, got " + std::to_string(f.size()) +
                      " fields",
                  number);
    double duration = 0.0;
    if (!ParseDouble(f[1], &duration))
      throw Error(ErrorCode::kMalformedLine, "bad duration '" + std::string(f[1]) + "'", number);
    std::vector<double> values;
    std::string_view rest = f[2];
    while (!rest.empty()) {
      const std::size_t sp = rest.find(' ');
      const std::string_view tok = rest.substr(0, sp);
      rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
      if (tok.empty()) continue;
      double v = 0.0;
      if (!ParseDouble(tok, &v))
        throw Error(ErrorCode::kMalformedLine, "bad value '" + std::string(tok) + "'", number);
      values.push_back(v);
    }
    if (values.empty()) throw Error(ErrorCode::kMalformedLine, "no embedding values", number);
    if (!archive) archive.emplace(values.size());
    if (values.size() != archive->dim())
      throw Error(ErrorCode::kInconsistentDim,
                  "dim " + std::to_string(values.size()) + ", expected " +
                      std::to_string(archive->dim()),
                  number);
    const std::string id(f[0]);
    if (id.empty()) throw Error(ErrorCode::kMalformedLine, "empty utterance id", number);
    if (archive->Find(id))
      throw Error(ErrorCode::kDuplicateUtteranceId, "duplicate utterance id '" + id + "'",
                  number);
    const float d32 = static_cast<float>(duration);
    if (!(d32 > 0.0f) || !std::isfinite(d32))
      throw Error(ErrorCode::kMalformedLine, "duration must be positive", number);
    for (double v : values)
      if (!std::isfinite(v))
        throw Error(ErrorCode::kMalformedLine, "non-finite embedding value", number);
    archive->Add(id, d32, std::move(values));
  });
  if (!archive) throw Error(ErrorCode::kEmptyInput, "no embeddings in TSV input");
  return std::move(*archive);
}

EmbeddingArchive ImportTsvEmbeddings(const fs::path &path) {
  return ParseTsvEmbeddings(ReadTextFile(path));
}

std::string FormatTsvEmbeddings(const EmbeddingArchive &a) {
  std::string out;
  for (const ArchiveRecord &rec : a.records()) {
    out += rec.id;
    out += '\t';
    out += FormatG17(rec.duration);
    out += '\t';
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
      if (i) out += ' ';
      out += FormatG17(rec.values[i]);
    }
    out += '\n';
  }
  return out;
}

void Manifest::Set(const std::string &key, const std::string &value) {
  if (key.empty() || key.find_first_of("=\n\r") != std::string::npos)
    throw Error(ErrorCode::kInvalidParams, "illegal manifest key '" + key + "'");
  if (value.empty() || value.find_first_of("\n\r") != std::string::npos)
    throw Error(ErrorCode::kInvalidParams, "illegal value for manifest key '" + key + "'");
  if (Get(key)) throw Error(ErrorCode::kInvalidParams, "duplicate manifest key '" + key + "'");
  entries_.emplace_back(key, value);
}

const std::string *Manifest::Get(const std::string &key) const {
  for (const auto &[k, v] : entries_)
    if (k == key) return &v;
  return nullptr;
}

std::string Manifest::Serialize() const {
  std::string out;
  for (const auto &[k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

Manifest Manifest::Parse(std::string_view text) {
  Manifest m;
  ForEachLine(text, [&](std::string_view line, std::size_t number) {
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == line.size())
      throw Error(ErrorCode::kMalformedLine, "expected key=value", number);
    const std::string key(line.substr(0, eq));
    if (m.Get(key))
      throw Error(ErrorCode::kMalformedLine, "duplicate key '" + key + "'", number);
    m.entries_.emplace_back(key, std::string(line.substr(eq + 1)));
  });
  return m;
}

void WriteManifest(const fs::path &path, const Manifest &m) { AtomicWriteFile(path, m.Serialize()); }
Manifest ReadManifest(const fs::path &path) { return Manifest::Parse(ReadTextFile(path)); }

std::string FileChecksum(const fs::path &path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : ReadFileBytes(path)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::uint8_t> ReadFileBytes(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading '" + path.string() + "'");
  return bytes;
}

std::string ReadTextFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading '" + path.string() + "'");
  return text;
}

void AtomicWriteFile(const fs::path &path, std::span<const std::uint8_t> bytes) {
  AtomicWriteFile(path, std::string_view(reinterpret_cast<const char *>(bytes.data()),
                                         bytes.size()));
}

void AtomicWriteFile(const fs::path &path, std::string_view text) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot create '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "error writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename onto '" + path.string() + "'");
  }
}

}  // namespace uniemb
