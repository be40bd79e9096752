#include "clinrel/app/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string_view>
#include <unordered_map>

namespace clinrel::app {

namespace {

constexpr std::array kDrugStems{"amo", "beta", "cefo", "dilo", "enal", "flu", "genta", "hydro", "ibu", "keto"};
constexpr std::array kDrugEndings{"xil", "pril", "zole", "mab", "statin"};
constexpr std::array kDisorderSingle{"nausea",   "headache",   "fever",    "dizziness", "hypotension",
                                     "anemia",   "insomnia",   "fatigue",  "arrhythmia", "pneumonia",
                                     "vomiting", "neutropenia"};
constexpr std::array kDisorderHead{"acute", "chronic", "renal", "hepatic", "cardiac", "gastric", "pulmonary", "skin"};
constexpr std::array kDisorderTail{"failure", "rash", "injury", "bleeding", "edema", "infection", "insufficiency",
                                   "toxicity"};
constexpr std::array kAdeCue{"caused", "induced", "triggered", "provoked"};
constexpr std::array kFunction{"and",   "was",     "by",       "for",    "to",    "treat",  "prescribed", "started",
                               "the",   "patient", "reports",  "history", "of",   "continue", "twice",    "daily",
                               "dose",  "adjusted", "vital",   "signs",  "were",  "stable", "follow",     "up",
                               "in",    "two",     "weeks",    "denies", "complaints", "discharged", "home", "."};

std::vector<std::string> drug_lexicon() {
  std::vector<std::string> out;
  for (auto s : kDrugStems)
    for (auto e : kDrugEndings) out.push_back(std::string(s) + e);
  return out;
}

class Builder {
 public:
  explicit Builder(std::string id) { doc_.id = std::move(id); }

  void word(std::string_view w) {
    if (!doc_.text.empty()) doc_.text += ' ';
    const std::size_t start = doc_.text.size();
    doc_.text += w;
    doc_.tokens.push_back({std::string(w), start, doc_.text.size(), sentence_});
  }

  std::string entity(EntityKind kind, const std::vector<std::string>& words) {
    const std::size_t b = doc_.tokens.size();
    for (const auto& w : words) word(w);
    std::string id = "T" + std::to_string(doc_.entities.size() + 1);
    doc_.entities.push_back({id, kind, b, doc_.tokens.size()});
    return id;
  }

  std::string relation(const std::string& drug, const std::string& disorder, RelationLabel label) {
    std::string id = "R" + std::to_string(doc_.relations.size() + 1);
    doc_.relations.push_back({id, drug, disorder, label});
    return id;
  }

  void group(std::vector<std::string> members) {
    doc_.groups.push_back({"G" + std::to_string(doc_.groups.size() + 1), std::move(members)});
  }

  void end_sentence() {
    word(".");
    ++sentence_;
  }

  Document finish() {
    doc_.doc_ade_flag = doc_.has_ade_relation();
    return std::move(doc_);
  }

 private:
  Document doc_;
  std::size_t sentence_ = 0;
};

}  // namespace

std::vector<std::string> synthetic_vocabulary() {
  std::vector<std::string> v = drug_lexicon();
  v.insert(v.end(), kDisorderSingle.begin(), kDisorderSingle.end());
  v.insert(v.end(), kDisorderHead.begin(), kDisorderHead.end());
  v.insert(v.end(), kDisorderTail.begin(), kDisorderTail.end());
  v.insert(v.end(), kAdeCue.begin(), kAdeCue.end());
  v.insert(v.end(), kFunction.begin(), kFunction.end());
  return v;
}

std::vector<Document> generate_synthetic_corpus(const SyntheticOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  const auto drugs = drug_lexicon();
  auto pick = [&](const auto& list) -> std::string {
    std::uniform_int_distribution<std::size_t> d(0, std::size(list) - 1);
    return std::string(list[d(rng)]);
  };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto disorder_words = [&] {
    if (chance(0.5)) return std::vector<std::string>{pick(kDisorderSingle)};
    std::vector<std::string> w{pick(kDisorderHead), pick(kDisorderTail)};
    if (chance(0.3)) w.push_back(pick(kDisorderTail));
    return w;
  };

  using Sentence = std::function<void(Builder&)>;
  std::vector<Document> docs;
  for (std::size_t n = 0; n < opts.documents; ++n) {
    std::vector<Sentence> plan;
    if (chance(opts.ade_rate)) {
      const int form = std::uniform_int_distribution<int>(0, 2)(rng);
      plan.push_back([&, form, d1 = pick(drugs), d2 = pick(drugs), dis = disorder_words(), cue = pick(kAdeCue)](Builder& b) {
        std::vector<std::string> rels;
        if (form == 0) {
          const auto x = b.entity(EntityKind::Drug, {d1});
          b.word(cue);
          const auto y = b.entity(EntityKind::Disorder, dis);
          rels.push_back(b.relation(x, y, RelationLabel::Ade));
        } else if (form == 1) {
          const auto y = b.entity(EntityKind::Disorder, dis);
          b.word("was");
          b.word(cue);
          b.word("by");
          const auto x = b.entity(EntityKind::Drug, {d1});
          rels.push_back(b.relation(x, y, RelationLabel::Ade));
        } else {
          const auto x1 = b.entity(EntityKind::Drug, {d1});
          b.word("and");
          const auto x2 = b.entity(EntityKind::Drug, {d2});
          b.word(cue);
          const auto y = b.entity(EntityKind::Disorder, dis);
          rels.push_back(b.relation(x1, y, RelationLabel::Ade));
          rels.push_back(b.relation(x2, y, RelationLabel::Ade));
        }
        b.group(std::move(rels));
        b.end_sentence();
      });
    }
    if (chance(opts.indication_rate)) {
      const bool form = chance(0.5);
      plan.push_back([form, d = pick(drugs), dis = disorder_words()](Builder& b) {
        if (form) {
          const auto x = b.entity(EntityKind::Drug, {d});
          for (auto w : {"was", "prescribed", "for"}) b.word(w);
          b.relation(x, b.entity(EntityKind::Disorder, dis), RelationLabel::Indication);
        } else {
          b.word("started");
          const auto x = b.entity(EntityKind::Drug, {d});
          b.word("to");
          b.word("treat");
          b.relation(x, b.entity(EntityKind::Disorder, dis), RelationLabel::Indication);
        }
        b.end_sentence();
      });
    }
    const int drug_only = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int i = 0; i < drug_only; ++i) {
      plan.push_back([form = chance(0.5), d = pick(drugs)](Builder& b) {
        if (form) {
          b.word("continue");
          b.entity(EntityKind::Drug, {d});
          b.word("twice");
          b.word("daily");
        } else {
          b.entity(EntityKind::Drug, {d});
          for (auto w : {"dose", "was", "adjusted"}) b.word(w);
        }
        b.end_sentence();
      });
    }
    const int disorder_only = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int i = 0; i < disorder_only; ++i) {
      plan.push_back([form = chance(0.5), dis = disorder_words()](Builder& b) {
        if (form) {
          b.word("patient");
          b.word("reports");
        } else {
          b.word("history");
          b.word("of");
        }
        b.entity(EntityKind::Disorder, dis);
        b.end_sentence();
      });
    }
    const int filler = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int i = 0; i < filler; ++i) {
      plan.push_back([form = std::uniform_int_distribution<int>(0, 2)(rng)](Builder& b) {
        static const std::vector<std::vector<std::string_view>> lines{
            {"vital", "signs", "were", "stable"},
            {"follow", "up", "in", "two", "weeks"},
            {"patient", "denies", "complaints"}};
        for (auto w : lines[static_cast<std::size_t>(form)]) b.word(w);
        b.end_sentence();
      });
    }
    std::shuffle(plan.begin(), plan.end(), rng);
    Builder b(opts.id_prefix + "-" + std::to_string(n + 1));
    for (auto& s : plan) s(b);
    docs.push_back(b.finish());
  }
  return docs;
}

namespace {

std::vector<double> random_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> v(dim);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

WordVectorTable synthetic_word_vectors(std::size_t dim, std::uint64_t seed) {
  WordVectorTable t(dim);
  std::mt19937_64 rng(seed);
  for (const auto& w : synthetic_vocabulary())
    if (!t.contains(w)) t.insert(w, random_vector(dim, rng));
  return t;
}

ContextualArchive synthetic_archive(const std::vector<Document>& docs, std::size_t dim, std::uint64_t seed) {
  const auto table = synthetic_word_vectors(dim, seed);
  ContextualArchive archive(dim);
  for (const auto& doc : docs) {
    ContextualBlock block;
    block.token_vectors = table.embed(doc);
    block.sentence_context = Matrix(doc.sentence_count(), dim);
    for (auto [b, e] : doc.sentence_ranges()) {
      const std::size_t s = doc.tokens[b].sentence_index;
      for (std::size_t t = b; t < e; ++t)
        for (std::size_t j = 0; j < dim; ++j) block.sentence_context(s, j) += block.token_vectors(t, j);
      for (std::size_t j = 0; j < dim; ++j) block.sentence_context(s, j) /= static_cast<double>(e - b);
    }
    archive.add(doc.id, std::move(block));
  }
  return archive;
}

}  // namespace clinrel::app
