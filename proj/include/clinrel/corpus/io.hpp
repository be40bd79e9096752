#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "clinrel/corpus/document.hpp"

namespace clinrel {

enum class CorpusFormat { Jsonl, Conll };

std::optional<CorpusFormat> parse_corpus_format(std::string_view s) noexcept;

/// Reads every document in the stream. Each document is validated.
/// Throws ParseError (with line number), EmptyInputError or IntegrityError.
std::vector<Document> read_corpus(std::istream& in, CorpusFormat format);

/// Reads exactly the first document of the stream.
Document parse_document(std::istream& in, CorpusFormat format);

std::vector<Document> read_corpus_file(const std::filesystem::path& path, CorpusFormat format);

void write_jsonl(std::ostream& out, const Document& doc);
void write_corpus_file(const std::filesystem::path& path, const std::vector<Document>& docs);

}  // namespace clinrel
