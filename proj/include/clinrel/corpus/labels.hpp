#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "clinrel/corpus/document.hpp"

namespace clinrel {

enum class Label : std::uint8_t { O, IDisorder, BDisorder, IDrug, BDrug, Pad, Cls, X };

using LabelSequence = std::vector<Label>;

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view s) noexcept;

constexpr bool is_begin(Label l) noexcept { return l == Label::BDrug || l == Label::BDisorder; }
constexpr bool is_inside(Label l) noexcept { return l == Label::IDrug || l == Label::IDisorder; }
/// Kind of a B-/I- label; nullopt for O and the special labels.
std::optional<EntityKind> kind_of(Label l) noexcept;
Label begin_label(EntityKind kind) noexcept;
Label inside_label(EntityKind kind) noexcept;

/// Ordered label inventory. The order fixes the row/column index used by
/// emission matrices, CRF transitions and probability rows. The core set is
/// the trailing five labels of the extended set, so a core probability row
/// lifts to an extended one by prefixing three zeros.
enum class LabelSetId : std::uint32_t { Core5 = 0, Extended8 = 1 };

class LabelSet {
 public:
  static const LabelSet& core5();
  static const LabelSet& extended8();
  static const LabelSet& get(LabelSetId id);

  LabelSetId id() const noexcept { return id_; }
  std::size_t size() const noexcept { return labels_.size(); }
  Label at(std::size_t index) const { return labels_.at(index); }
  std::span<const Label> labels() const noexcept { return labels_; }
  /// Index of `label`, or nullopt when the set does not contain it.
  std::optional<std::size_t> index_of(Label label) const noexcept;
  std::size_t index(Label label) const;

  /// Whether the transition from -> to is structurally valid under BIO.
  bool allowed_transition(std::size_t from, std::size_t to) const;
  /// Whether a sequence may begin with this label.
  bool allowed_start(std::size_t to) const;

 private:
  LabelSet(LabelSetId id, std::vector<Label> labels) : id_(id), labels_(std::move(labels)) {}
  LabelSetId id_;
  std::vector<Label> labels_;
};

std::string_view to_string(LabelSetId id) noexcept;
std::optional<LabelSetId> parse_label_set(std::string_view s) noexcept;

}  // namespace clinrel
