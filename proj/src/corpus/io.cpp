#include "clinrel/corpus/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "clinrel/corpus/bio.hpp"
#include "clinrel/corpus/labels.hpp"
#include "clinrel/error.hpp"

namespace clinrel {

using nlohmann::json;

std::optional<CorpusFormat> parse_corpus_format(std::string_view s) noexcept {
  if (s == "jsonl") return CorpusFormat::Jsonl;
  if (s == "conll") return CorpusFormat::Conll;
  return std::nullopt;
}

namespace {

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing key '") + key + "'", line);
  return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, std::size_t line) {
  try {
    return field(obj, key, line).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what(), line);
  }
}

const json& array_field(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_array()) throw ParseError(std::string("'") + key + "' must be an array", line);
  return v;
}

Document document_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("record is not a JSON object", line);
  Document doc;
  doc.id = get_as<std::string>(j, "id", line);
  doc.text = get_as<std::string>(j, "text", line);
  for (const auto& t : array_field(j, "tokens", line)) {
    doc.tokens.push_back(Token{get_as<std::string>(t, "t", line), get_as<std::size_t>(t, "s", line),
                               get_as<std::size_t>(t, "e", line),
                               get_as<std::size_t>(t, "sent", line)});
  }
  if (j.contains("entities")) {
    for (const auto& e : array_field(j, "entities", line)) {
      const auto kind_name = get_as<std::string>(e, "kind", line);
      auto kind = parse_entity_kind(kind_name);
      if (!kind) throw ParseError("unknown entity kind '" + kind_name + "'", line);
      doc.entities.push_back(EntitySpan{get_as<std::string>(e, "id", line), *kind,
                                        get_as<std::size_t>(e, "ts", line),
                                        get_as<std::size_t>(e, "te", line)});
    }
  }
  if (j.contains("relations")) {
    for (const auto& r : array_field(j, "relations", line)) {
      const auto label_name = get_as<std::string>(r, "label", line);
      auto label = parse_relation_label(label_name);
      if (!label) throw ParseError("unknown relation label '" + label_name + "'", line);
      doc.relations.push_back(RelationAnnotation{get_as<std::string>(r, "id", line),
                                                 get_as<std::string>(r, "drug", line),
                                                 get_as<std::string>(r, "disorder", line), *label});
    }
  }
  if (j.contains("groups")) {
    for (const auto& g : array_field(j, "groups", line)) {
      doc.groups.push_back(AdeGroup{get_as<std::string>(g, "id", line),
                                    get_as<std::vector<std::string>>(g, "members", line)});
    }
  }
  if (j.contains("doc_ade") && !j["doc_ade"].is_null()) doc.doc_ade_flag = get_as<bool>(j, "doc_ade", line);
  return doc;
}

std::vector<Document> read_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    Document doc = document_from_json(j, line);
    validate(doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

class ConllBuilder {
 public:
  void add_token(const std::string& text, Label label, std::size_t line) {
    if (text.empty()) throw ParseError("empty token text", line);
    if (!doc_.tokens.empty()) doc_.text += sentence_open_ ? " " : "\n";
    Token t{text, doc_.text.size(), doc_.text.size() + text.size(), sentence_};
    doc_.text += text;
    doc_.tokens.push_back(std::move(t));
    sentence_labels_.push_back(label);
    sentence_open_ = true;
  }

  void end_sentence() {
    if (!sentence_open_) return;
    const std::size_t offset = doc_.tokens.size() - sentence_labels_.size();
    for (auto span : decode_bio(sentence_labels_)) {
      span.token_start += offset;
      span.token_end += offset;
      span.id = "T" + std::to_string(doc_.entities.size() + 1);
      doc_.entities.push_back(std::move(span));
    }
    sentence_labels_.clear();
    sentence_open_ = false;
    ++sentence_;
  }

  bool empty() const { return doc_.tokens.empty(); }

  Document finish(std::size_t ordinal) {
    end_sentence();
    Document out = std::move(doc_);
    out.id = "doc-" + std::to_string(ordinal);
    doc_ = Document{};
    sentence_ = 0;
    return out;
  }

 private:
  Document doc_;
  LabelSequence sentence_labels_;
  std::size_t sentence_ = 0;
  bool sentence_open_ = false;
};

std::vector<Document> read_conll(std::istream& in) {
  std::vector<Document> docs;
  ConllBuilder builder;
  std::string text;
  std::size_t line = 0;
  int blank_run = 0;
  auto flush = [&] {
    if (builder.empty()) return;
    Document doc = builder.finish(docs.size() + 1);
    validate(doc);
    docs.push_back(std::move(doc));
  };
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) {
      ++blank_run;
      builder.end_sentence();
      if (blank_run == 2) flush();
      continue;
    }
    blank_run = 0;
    const auto tab = text.find('\t');
    if (tab == std::string::npos) throw ParseError("expected 'text<TAB>label'", line);
    const std::string label_name = text.substr(tab + 1);
    auto label = parse_label(label_name);
    if (!label || !(is_begin(*label) || is_inside(*label) || *label == Label::O))
      throw ParseError("unknown BIO label '" + label_name + "'", line);
    builder.add_token(text.substr(0, tab), *label, line);
  }
  flush();
  return docs;
}

json document_to_json(const Document& doc) {
  json tokens = json::array();
  for (const auto& t : doc.tokens)
    tokens.push_back({{"t", t.text}, {"s", t.char_start}, {"e", t.char_end}, {"sent", t.sentence_index}});
  json entities = json::array();
  for (const auto& e : doc.entities)
    entities.push_back({{"id", e.id}, {"kind", to_string(e.kind)}, {"ts", e.token_start}, {"te", e.token_end}});
  json relations = json::array();
  for (const auto& r : doc.relations)
    relations.push_back(
        {{"id", r.id}, {"drug", r.drug_id}, {"disorder", r.disorder_id}, {"label", to_string(r.label)}});
  json groups = json::array();
  for (const auto& g : doc.groups) groups.push_back({{"id", g.id}, {"members", g.member_relation_ids}});
  json j = {{"id", doc.id},         {"text", doc.text},           {"tokens", tokens},
            {"entities", entities}, {"relations", relations}, {"groups", groups}};
  if (doc.doc_ade_flag) j["doc_ade"] = *doc.doc_ade_flag;
  return j;
}

}  // namespace

std::vector<Document> read_corpus(std::istream& in, CorpusFormat format) {
  auto docs = format == CorpusFormat::Jsonl ? read_jsonl(in) : read_conll(in);
  if (docs.empty()) throw EmptyInputError();
  return docs;
}

Document parse_document(std::istream& in, CorpusFormat format) {
  return std::move(read_corpus(in, format).front());
}

std::vector<Document> read_corpus_file(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_corpus(in, format);
}

void write_jsonl(std::ostream& out, const Document& doc) { out << document_to_json(doc).dump() << '\n'; }

void write_corpus_file(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& d : docs) write_jsonl(out, d);
}

}  // namespace clinrel
