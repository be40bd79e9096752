#include "clinrel/embed/source.hpp"

#include "clinrel/error.hpp"

namespace clinrel {

std::size_t EncoderSource::dim() const noexcept {
  if (auto* t = table()) return t->dim();
  return archive()->dim();
}

const ContextualArchive* EncoderSource::archive() const noexcept {
  auto* p = std::get_if<const ContextualArchive*>(&source_);
  return p ? *p : nullptr;
}

const WordVectorTable* EncoderSource::table() const noexcept {
  auto* p = std::get_if<const WordVectorTable*>(&source_);
  return p ? *p : nullptr;
}

Matrix EncoderSource::token_inputs(const Document& doc) const {
  if (auto* t = table()) return t->embed(doc);
  archive()->validate_against(doc);
  return archive()->at(doc.id).token_vectors;
}

const Matrix& EncoderSource::sentence_context(const Document& doc) const {
  if (!archive()) throw ConfigError("sentence context vectors come only from a contextual archive");
  return archive()->at(doc.id).sentence_context;
}

const std::optional<Matrix>& EncoderSource::archived_probabilities(const Document& doc) const {
  static const std::optional<Matrix> none;
  if (!archive()) return none;
  return archive()->at(doc.id).label_probabilities;
}

}  // namespace clinrel
