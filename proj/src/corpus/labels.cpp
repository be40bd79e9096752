#include "clinrel/corpus/labels.hpp"

#include <array>

#include "clinrel/error.hpp"

namespace clinrel {

namespace {

constexpr std::array<std::pair<Label, std::string_view>, 8> kNames{{
    {Label::O, "O"},
    {Label::IDisorder, "I-Disorder"},
    {Label::BDisorder, "B-Disorder"},
    {Label::IDrug, "I-Drug"},
    {Label::BDrug, "B-Drug"},
    {Label::Pad, "[PAD]"},
    {Label::Cls, "[CLS]"},
    {Label::X, "X"},
}};

}  // namespace

std::string_view to_string(Label label) noexcept {
  for (const auto& [l, name] : kNames)
    if (l == label) return name;
  return "?";
}

std::optional<Label> parse_label(std::string_view s) noexcept {
  for (const auto& [l, name] : kNames)
    if (name == s) return l;
  return std::nullopt;
}

std::optional<EntityKind> kind_of(Label l) noexcept {
  switch (l) {
    case Label::BDrug:
    case Label::IDrug:
      return EntityKind::Drug;
    case Label::BDisorder:
    case Label::IDisorder:
      return EntityKind::Disorder;
    default:
      return std::nullopt;
  }
}

Label begin_label(EntityKind kind) noexcept {
  return kind == EntityKind::Drug ? Label::BDrug : Label::BDisorder;
}

Label inside_label(EntityKind kind) noexcept {
  return kind == EntityKind::Drug ? Label::IDrug : Label::IDisorder;
}

const LabelSet& LabelSet::core5() {
  static const LabelSet set(LabelSetId::Core5, {Label::O, Label::IDisorder, Label::BDisorder,
                                                Label::IDrug, Label::BDrug});
  return set;
}

const LabelSet& LabelSet::extended8() {
  static const LabelSet set(LabelSetId::Extended8,
                            {Label::Pad, Label::Cls, Label::X, Label::O, Label::IDisorder,
                             Label::BDisorder, Label::IDrug, Label::BDrug});
  return set;
}

const LabelSet& LabelSet::get(LabelSetId id) {
  return id == LabelSetId::Core5 ? core5() : extended8();
}

std::optional<std::size_t> LabelSet::index_of(Label label) const noexcept {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

std::size_t LabelSet::index(Label label) const {
  auto i = index_of(label);
  if (!i) throw EncodingError("label " + std::string(to_string(label)) + " is not in the label set");
  return *i;
}

bool LabelSet::allowed_transition(std::size_t from, std::size_t to) const {
  const Label dst = labels_.at(to);
  if (!is_inside(dst)) return true;
  const Label src = labels_.at(from);
  if (src == Label::X) return true;
  return (is_begin(src) || is_inside(src)) && kind_of(src) == kind_of(dst);
}

bool LabelSet::allowed_start(std::size_t to) const { return !is_inside(labels_.at(to)); }

std::string_view to_string(LabelSetId id) noexcept {
  return id == LabelSetId::Core5 ? "core5" : "extended8";
}

std::optional<LabelSetId> parse_label_set(std::string_view s) noexcept {
  if (s == "core5") return LabelSetId::Core5;
  if (s == "extended8") return LabelSetId::Extended8;
  return std::nullopt;
}

}  // namespace clinrel
