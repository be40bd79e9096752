#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "clinrel/corpus/document.hpp"
#include "clinrel/corpus/labels.hpp"

namespace clinrel {

/// Maps each subword piece to the index of the corpus token it came from.
/// Pieces of one token are contiguous; the first piece of a token carries
/// the token's label and the rest are labelled X.
using SubwordAlignment = std::vector<std::size_t>;

/// Per-token BIO labels for `doc`. Extended8 requires `pieces`.
/// Throws EncodingError on overlapping spans or a missing alignment.
LabelSequence encode_bio(const Document& doc, LabelSetId label_set = LabelSetId::Core5,
                         const SubwordAlignment* pieces = nullptr);

/// Spans encoded by `labels`. A stray I- with no compatible predecessor opens
/// a new span of its kind. X continues the open span; special labels act as O.
/// Span ids are `id_prefix` followed by a 1-based counter.
std::vector<EntitySpan> decode_bio(std::span<const Label> labels, std::string_view id_prefix = "T");

}  // namespace clinrel
