#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clinrel/corpus/document.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel {

inline constexpr std::size_t kArchiveProbabilityColumns = 8;

/// Contextual representations for one document, aligned to its tokens.
struct ContextualBlock {
  Matrix token_vectors;     // T x dim
  Matrix sentence_context;  // S x dim
  std::optional<Matrix> label_probabilities;  // T x 8, extended label order
};

inline bool operator==(const ContextualBlock& a, const ContextualBlock& b) {
  return a.token_vectors == b.token_vectors && a.sentence_context == b.sentence_context &&
         a.label_probabilities == b.label_probabilities;
}

/// Precomputed transformer outputs keyed by document id.
///
/// Binary layout (little-endian): magic "CEA1", u32 dim, then per document
/// u32 id length, id bytes, u32 T, u32 S, T*dim float32, S*dim float32,
/// u8 has_probs, and T*8 float32 when has_probs is 1.
class ContextualArchive {
 public:
  ContextualArchive() = default;
  explicit ContextualArchive(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  bool contains(const std::string& doc_id) const { return blocks_.count(doc_id) != 0; }
  const ContextualBlock& at(const std::string& doc_id) const;
  const std::map<std::string, ContextualBlock>& blocks() const noexcept { return blocks_; }

  /// Throws ShapeError when widths disagree with dim().
  void add(const std::string& doc_id, ContextualBlock block);

  /// Throws AlignmentError naming the first document whose row counts differ.
  void validate_against(const Document& doc) const;

  void write(std::ostream& out) const;
  void write_file(const std::filesystem::path& path) const;

  friend bool operator==(const ContextualArchive&, const ContextualArchive&) = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, ContextualBlock> blocks_;
};

/// Reads an archive and checks it against `corpus`: every archived id must be
/// a corpus document and row counts must match its tokens and sentences.
ContextualArchive load_contextual_archive(std::istream& in, const std::vector<Document>& corpus);
ContextualArchive load_contextual_archive_file(const std::filesystem::path& path,
                                               const std::vector<Document>& corpus);

/// Reads an archive without corpus validation.
ContextualArchive read_contextual_archive(std::istream& in);

}  // namespace clinrel
