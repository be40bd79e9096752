#pragma once

#include <cstddef>
#include <optional>
#include <variant>

#include "clinrel/corpus/document.hpp"
#include "clinrel/embed/contextual_archive.hpp"
#include "clinrel/embed/word_vectors.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel {

/// Where token inputs for the tagger come from: static word vectors (the
/// recurrent path) or a precomputed contextual archive (the transformer path).
/// Non-owning; the table or archive must outlive the source.
class EncoderSource {
 public:
  explicit EncoderSource(const WordVectorTable& table) : source_(&table) {}
  explicit EncoderSource(const ContextualArchive& archive) : source_(&archive) {}

  bool is_static() const noexcept { return std::holds_alternative<const WordVectorTable*>(source_); }
  std::size_t dim() const noexcept;

  /// T x dim token inputs. Throws AlignmentError if the archive lacks the document.
  Matrix token_inputs(const Document& doc) const;

  /// S x dim per-sentence context vectors (archive only).
  const Matrix& sentence_context(const Document& doc) const;

  /// T x 8 probability rows when the archive supplies them.
  const std::optional<Matrix>& archived_probabilities(const Document& doc) const;

  const ContextualArchive* archive() const noexcept;
  const WordVectorTable* table() const noexcept;

 private:
  std::variant<const WordVectorTable*, const ContextualArchive*> source_;
};

}  // namespace clinrel
