#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "clinrel/corpus/document.hpp"
#include "clinrel/embed/contextual_archive.hpp"
#include "clinrel/embed/word_vectors.hpp"

namespace clinrel::app {

/// Generated clinical-style notes with planted entities and relations.
///
/// Drugs are single tokens from a closed lexicon; disorders are one token or
/// a head word followed by one or two modifier words. A document carries at
/// most one ADE sentence (a cue verb links one or two drugs to one disorder,
/// forming one ADE group) and at most one indication sentence, mixed with
/// drug-only, disorder-only and filler sentences.
struct SyntheticOptions {
  std::size_t documents = 240;
  double ade_rate = 0.6;
  double indication_rate = 0.5;
  std::string id_prefix = "syn";
  std::uint64_t seed = 1;
};

std::vector<Document> generate_synthetic_corpus(const SyntheticOptions& opts);

/// Every word the generator can emit.
std::vector<std::string> synthetic_vocabulary();

/// Random unit-scale vectors for the synthetic vocabulary.
WordVectorTable synthetic_word_vectors(std::size_t dim, std::uint64_t seed);

/// Per-token vectors (a fixed random vector per word) and per-sentence means.
ContextualArchive synthetic_archive(const std::vector<Document>& docs, std::size_t dim, std::uint64_t seed);

}  // namespace clinrel::app
