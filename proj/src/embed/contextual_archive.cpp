#include "clinrel/embed/contextual_archive.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "clinrel/binary_io.hpp"
#include "clinrel/error.hpp"

namespace clinrel {

const ContextualBlock& ContextualArchive::at(const std::string& doc_id) const {
  auto it = blocks_.find(doc_id);
  if (it == blocks_.end()) throw AlignmentError("archive has no entry for document '" + doc_id + "'");
  return it->second;
}

void ContextualArchive::add(const std::string& doc_id, ContextualBlock block) {
  if (block.token_vectors.cols() != dim_ || block.sentence_context.cols() != dim_)
    throw ShapeError("archive block for '" + doc_id + "' does not have width " + std::to_string(dim_));
  if (block.label_probabilities) {
    require_shape(*block.label_probabilities, block.token_vectors.rows(), kArchiveProbabilityColumns,
                  "archive label probabilities");
  }
  blocks_[doc_id] = std::move(block);
}

void ContextualArchive::validate_against(const Document& doc) const {
  const ContextualBlock& b = at(doc.id);
  if (b.token_vectors.rows() != doc.tokens.size())
    throw AlignmentError("document '" + doc.id + "': archive has " + std::to_string(b.token_vectors.rows()) +
                         " token rows, document has " + std::to_string(doc.tokens.size()) + " tokens");
  if (b.sentence_context.rows() != doc.sentence_count())
    throw AlignmentError("document '" + doc.id + "': archive has " +
                         std::to_string(b.sentence_context.rows()) + " sentence rows, document has " +
                         std::to_string(doc.sentence_count()) + " sentences");
}

void ContextualArchive::write(std::ostream& out) const {
  bin::write_magic(out, "CEA1");
  bin::write_u32(out, static_cast<std::uint32_t>(dim_));
  for (const auto& [id, b] : blocks_) {
    bin::write_string(out, id);
    bin::write_u32(out, static_cast<std::uint32_t>(b.token_vectors.rows()));
    bin::write_u32(out, static_cast<std::uint32_t>(b.sentence_context.rows()));
    bin::write_f32_block(out, b.token_vectors);
    bin::write_f32_block(out, b.sentence_context);
    bin::write_u8(out, b.label_probabilities ? 1 : 0);
    if (b.label_probabilities) bin::write_f32_block(out, *b.label_probabilities);
  }
}

void ContextualArchive::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write(out);
}

ContextualArchive read_contextual_archive(std::istream& in) {
  bin::Reader r(in, "contextual archive");
  r.expect_magic("CEA1");
  ContextualArchive archive(r.u32());
  while (!r.at_end()) {
    const std::string id = r.string();
    if (archive.contains(id)) r.fail("duplicate document '" + id + "'");
    const std::uint32_t tokens = r.u32();
    const std::uint32_t sentences = r.u32();
    ContextualBlock b;
    b.token_vectors = r.f32_block(tokens, archive.dim());
    b.sentence_context = r.f32_block(sentences, archive.dim());
    const std::uint8_t has_probs = r.u8();
    if (has_probs > 1) r.fail("has_probs flag must be 0 or 1");
    if (has_probs) b.label_probabilities = r.f32_block(tokens, kArchiveProbabilityColumns);
    archive.add(id, std::move(b));
  }
  return archive;
}

ContextualArchive load_contextual_archive(std::istream& in, const std::vector<Document>& corpus) {
  ContextualArchive archive = read_contextual_archive(in);
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus) by_id.emplace(d.id, &d);
  for (const auto& [id, block] : archive.blocks()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw AlignmentError("archive names unknown document '" + id + "'");
    archive.validate_against(*it->second);
  }
  return archive;
}

ContextualArchive load_contextual_archive_file(const std::filesystem::path& path,
                                               const std::vector<Document>& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return load_contextual_archive(in, corpus);
}

}  // namespace clinrel
