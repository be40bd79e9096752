#include "clinrel/corpus/bio.hpp"

#include <optional>
#include <string>

#include "clinrel/error.hpp"

namespace clinrel {

namespace {

LabelSequence encode_tokens(const Document& doc) {
  LabelSequence labels(doc.tokens.size(), Label::O);
  for (const auto& e : doc.entities) {
    if (e.token_start >= e.token_end || e.token_end > labels.size())
      throw EncodingError("entity '" + e.id + "' lies outside the token range");
    for (std::size_t t = e.token_start; t < e.token_end; ++t) {
      if (labels[t] != Label::O)
        throw EncodingError("entity '" + e.id + "' overlaps another span at token " +
                            std::to_string(t));
      labels[t] = t == e.token_start ? begin_label(e.kind) : inside_label(e.kind);
    }
  }
  return labels;
}

}  // namespace

LabelSequence encode_bio(const Document& doc, LabelSetId label_set, const SubwordAlignment* pieces) {
  LabelSequence tokens = encode_tokens(doc);
  if (label_set == LabelSetId::Core5) return tokens;

  if (!pieces) throw EncodingError("extended8 encoding needs a subword alignment map");
  LabelSequence out;
  out.reserve(pieces->size());
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < pieces->size(); ++i) {
    const std::size_t tok = (*pieces)[i];
    if (tok >= tokens.size()) throw EncodingError("subword piece maps past the last token");
    if (prev && tok < *prev) throw EncodingError("subword alignment is not monotone");
    if (prev && tok > *prev + 1) throw EncodingError("subword alignment skips a token");
    if (!prev && tok != 0) throw EncodingError("subword alignment does not start at token 0");
    out.push_back(prev && tok == *prev ? Label::X : tokens[tok]);
    prev = tok;
  }
  if (!tokens.empty() && (!prev || *prev + 1 != tokens.size()))
    throw EncodingError("subword alignment does not cover every token");
  return out;
}

std::vector<EntitySpan> decode_bio(std::span<const Label> labels, std::string_view id_prefix) {
  std::vector<EntitySpan> spans;
  std::optional<EntitySpan> open;
  auto close = [&](std::size_t end) {
    if (!open) return;
    open->token_end = end;
    open->id = std::string(id_prefix) + std::to_string(spans.size() + 1);
    spans.push_back(*open);
    open.reset();
  };

  for (std::size_t t = 0; t < labels.size(); ++t) {
    const Label l = labels[t];
    if (l == Label::X) continue;
    const auto kind = kind_of(l);
    if (!kind) {
      close(t);
      continue;
    }
    const bool continues = is_inside(l) && open && open->kind == *kind;
    if (continues) continue;
    close(t);
    open = EntitySpan{"", *kind, t, t + 1};
  }
  close(labels.size());
  return spans;
}

}  // namespace clinrel
