#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clinrel {

enum class EntityKind { Drug, Disorder };
enum class RelationLabel { Ade, Indication };

std::string_view to_string(EntityKind kind) noexcept;
std::string_view to_string(RelationLabel label) noexcept;
std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept;
std::optional<RelationLabel> parse_relation_label(std::string_view s) noexcept;

/// One token; offsets are half-open byte offsets into Document::text.
struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t sentence_index = 0;
};

/// Half-open token range [token_start, token_end).
struct EntitySpan {
  std::string id;
  EntityKind kind = EntityKind::Drug;
  std::size_t token_start = 0;
  std::size_t token_end = 0;

  std::size_t length() const noexcept { return token_end - token_start; }
  bool overlaps(const EntitySpan& other) const noexcept {
    return token_start < other.token_end && other.token_start < token_end;
  }
  /// Same kind and range, ignoring the id.
  bool same_extent(const EntitySpan& other) const noexcept {
    return kind == other.kind && token_start == other.token_start && token_end == other.token_end;
  }
};

struct RelationAnnotation {
  std::string id;
  std::string drug_id;
  std::string disorder_id;
  RelationLabel label = RelationLabel::Ade;
};

/// ADE relations that describe one clinical event.
struct AdeGroup {
  std::string id;
  std::vector<std::string> member_relation_ids;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<EntitySpan> entities;
  std::vector<RelationAnnotation> relations;
  std::vector<AdeGroup> groups;
  std::optional<bool> doc_ade_flag;

  std::size_t sentence_count() const noexcept {
    return tokens.empty() ? 0 : tokens.back().sentence_index + 1;
  }
  const EntitySpan* find_entity(std::string_view entity_id) const noexcept;
  const RelationAnnotation* find_relation(std::string_view relation_id) const noexcept;
  std::size_t sentence_of(const EntitySpan& span) const { return tokens.at(span.token_start).sentence_index; }
  bool has_ade_relation() const noexcept;
  /// Half-open token ranges of each sentence, in order. Empty sentences are skipped.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_ranges() const;
  /// Document-level ADE truth: the explicit flag when present, else any ADE relation.
  bool ade_truth() const noexcept { return doc_ade_flag.value_or(has_ade_relation()); }
};

/// Throws IntegrityError naming the first violated invariant.
void validate(const Document& doc);

}  // namespace clinrel
