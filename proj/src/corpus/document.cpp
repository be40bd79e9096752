#include "clinrel/corpus/document.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>

#include "clinrel/error.hpp"

namespace clinrel {

std::string_view to_string(EntityKind kind) noexcept {
  return kind == EntityKind::Drug ? "Drug" : "Disorder";
}

std::string_view to_string(RelationLabel label) noexcept {
  return label == RelationLabel::Ade ? "ADE" : "Indication";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) noexcept {
  if (s == "Drug") return EntityKind::Drug;
  if (s == "Disorder") return EntityKind::Disorder;
  return std::nullopt;
}

std::optional<RelationLabel> parse_relation_label(std::string_view s) noexcept {
  if (s == "ADE") return RelationLabel::Ade;
  if (s == "Indication") return RelationLabel::Indication;
  return std::nullopt;
}

const EntitySpan* Document::find_entity(std::string_view entity_id) const noexcept {
  for (const auto& e : entities)
    if (e.id == entity_id) return &e;
  return nullptr;
}

const RelationAnnotation* Document::find_relation(std::string_view relation_id) const noexcept {
  for (const auto& r : relations)
    if (r.id == relation_id) return &r;
  return nullptr;
}

bool Document::has_ade_relation() const noexcept {
  return std::any_of(relations.begin(), relations.end(),
                     [](const auto& r) { return r.label == RelationLabel::Ade; });
}

namespace {

[[noreturn]] void fail(const Document& doc, const std::string& msg) {
  throw IntegrityError("document '" + doc.id + "': " + msg);
}

void validate_tokens(const Document& doc) {
  std::size_t prev_end = 0;
  std::size_t prev_sentence = 0;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const Token& t = doc.tokens[i];
    const std::string where = "token " + std::to_string(i);
    if (t.char_start >= t.char_end) fail(doc, where + " has an empty or inverted offset range");
    if (t.char_end > doc.text.size()) fail(doc, where + " extends past the end of the text");
    if (i > 0 && t.char_start < prev_end) fail(doc, where + " overlaps or precedes its predecessor");
    if (i > 0 && t.sentence_index < prev_sentence) fail(doc, where + " decreases the sentence index");
    if (doc.text.compare(t.char_start, t.char_end - t.char_start, t.text) != 0)
      fail(doc, where + " text '" + t.text + "' does not match its offsets");
    prev_end = t.char_end;
    prev_sentence = t.sentence_index;
  }
}

void validate_entities(const Document& doc) {
  std::set<std::string> ids;
  for (const auto& e : doc.entities) {
    if (!ids.insert(e.id).second) fail(doc, "duplicate entity id '" + e.id + "'");
    if (e.token_start >= e.token_end || e.token_end > doc.tokens.size())
      fail(doc, "entity '" + e.id + "' has an invalid token range");
  }
  std::vector<const EntitySpan*> sorted;
  for (const auto& e : doc.entities) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->token_start < b->token_start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->token_start < sorted[i - 1]->token_end)
      fail(doc, "entities '" + sorted[i - 1]->id + "' and '" + sorted[i]->id +
                    "' overlap; overlapping or nested spans are not representable in BIO");
  }
}

void validate_relations(const Document& doc) {
  std::set<std::string> ids;
  std::set<std::tuple<std::string, std::string, RelationLabel>> triples;
  for (const auto& r : doc.relations) {
    if (!ids.insert(r.id).second) fail(doc, "duplicate relation id '" + r.id + "'");
    const EntitySpan* drug = doc.find_entity(r.drug_id);
    const EntitySpan* disorder = doc.find_entity(r.disorder_id);
    if (!drug) fail(doc, "relation '" + r.id + "' references missing entity '" + r.drug_id + "'");
    if (!disorder)
      fail(doc, "relation '" + r.id + "' references missing entity '" + r.disorder_id + "'");
    if (drug->kind != EntityKind::Drug) fail(doc, "relation '" + r.id + "' drug side is not a Drug");
    if (disorder->kind != EntityKind::Disorder)
      fail(doc, "relation '" + r.id + "' disorder side is not a Disorder");
    if (!triples.emplace(r.drug_id, r.disorder_id, r.label).second)
      fail(doc, "relation '" + r.id + "' duplicates an existing (drug, disorder, label) triple");
  }
}

void validate_groups(const Document& doc) {
  std::set<std::string> ids;
  std::unordered_map<std::string, std::string> owner;
  for (const auto& g : doc.groups) {
    if (!ids.insert(g.id).second) fail(doc, "duplicate group id '" + g.id + "'");
    if (g.member_relation_ids.empty()) fail(doc, "group '" + g.id + "' is empty");
    for (const auto& m : g.member_relation_ids) {
      const RelationAnnotation* r = doc.find_relation(m);
      if (!r) fail(doc, "group '" + g.id + "' references missing relation '" + m + "'");
      if (r->label != RelationLabel::Ade)
        fail(doc, "group '" + g.id + "' member '" + m + "' is not an ADE relation");
      auto [it, fresh] = owner.emplace(m, g.id);
      if (!fresh && it->second != g.id)
        fail(doc, "relation '" + m + "' belongs to groups '" + it->second + "' and '" + g.id + "'");
    }
  }
}

}  // namespace

void validate(const Document& doc) {
  validate_tokens(doc);
  validate_entities(doc);
  validate_relations(doc);
  validate_groups(doc);
  if (doc.doc_ade_flag.has_value() && !*doc.doc_ade_flag && doc.has_ade_relation())
    fail(doc, "doc_ade is false but the document annotates an ADE relation");
}

std::vector<std::pair<std::size_t, std::size_t>> Document::sentence_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= tokens.size(); ++t) {
    if (t == tokens.size() || tokens[t].sentence_index != tokens[begin].sentence_index) {
      out.emplace_back(begin, t);
      begin = t;
    }
  }
  return out;
}

}  // namespace clinrel
