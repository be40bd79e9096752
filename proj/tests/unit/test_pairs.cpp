#include <doctest.h>

#include <random>
#include <sstream>

#include "clinrel/error.hpp"
#include "clinrel/pairs/pairs.hpp"
#include "oracles.hpp"

using namespace clinrel;

namespace {

/// Six sentences of three tokens each.
Document six_sentences() {
  Document d;
  d.id = "p";
  for (std::size_t i = 0; i < 18; ++i) {
    if (!d.text.empty()) d.text += ' ';
    const std::size_t s = d.text.size();
    d.text += "t" + std::to_string(i);
    d.tokens.push_back({"t" + std::to_string(i), s, d.text.size(), i / 3});
  }
  return d;
}

}  // namespace

TEST_CASE("candidate generation respects the sentence window") {
  Document d = six_sentences();
  d.entities = {{"A", EntityKind::Drug, 0, 1}, {"B", EntityKind::Drug, 1, 2}, {"C", EntityKind::Disorder, 2, 3},
                {"E", EntityKind::Disorder, 15, 16}};
  const auto pairs = generate_candidates(d, d.entities, 4);
  CHECK(pairs.size() == 2);  // sentence 5 is five sentences away
  for (const auto& p : pairs) CHECK(p.disorder.id == "C");

  d.entities.push_back({"F", EntityKind::Disorder, 12, 13});  // sentence 4: inside the window
  CHECK(generate_candidates(d, d.entities, 4).size() == 4);

  Document both = six_sentences();
  both.tokens[3].sentence_index = 0;
  both.entities = {{"A", EntityKind::Drug, 0, 1}, {"B", EntityKind::Drug, 1, 2}, {"C", EntityKind::Disorder, 2, 3},
                   {"D", EntityKind::Disorder, 3, 4}};
  const auto four = generate_candidates(both, both.entities);
  REQUIRE(four.size() == 4);
  CHECK(four[0].drug.id == "A");
  CHECK(four[0].disorder.id == "C");
  CHECK(four[3].drug.id == "B");
  CHECK(four[3].disorder.id == "D");

  Document drugs = six_sentences();
  drugs.entities = {{"A", EntityKind::Drug, 0, 1}};
  CHECK(generate_candidates(drugs, drugs.entities).empty());
}

TEST_CASE("entity alignment") {
  const std::vector<EntitySpan> p1{{"p", EntityKind::Drug, 10, 12}};
  CHECK(align_entities(p1, std::vector<EntitySpan>{{"g", EntityKind::Drug, 11, 13}}).at("p") == "g");
  CHECK(align_entities(p1, std::vector<EntitySpan>{{"g", EntityKind::Disorder, 10, 12}}).empty());

  const std::vector<EntitySpan> wide{{"p", EntityKind::Drug, 5, 9}};
  const std::vector<EntitySpan> gold{{"g1", EntityKind::Drug, 5, 7}, {"g2", EntityKind::Drug, 8, 9}};
  CHECK(align_entities(wide, gold).at("p") == "g1");
  CHECK(align_entities_exact(wide, gold).empty());
}

TEST_CASE("pair labels follow the alignment") {
  Document d = six_sentences();
  d.entities = {{"g1", EntityKind::Drug, 0, 1}, {"g2", EntityKind::Disorder, 2, 3}, {"g3", EntityKind::Disorder, 4, 5}};
  d.relations = {{"r1", "g1", "g2", RelationLabel::Indication}, {"r2", "g1", "g3", RelationLabel::Ade}};

  auto gold_pairs = generate_candidates(d, d.entities);
  derive_pair_labels(gold_pairs, d, identity_alignment(d.entities));
  REQUIRE(gold_pairs.size() == 2);
  CHECK(gold_pairs[0].gold_indication);
  CHECK(!gold_pairs[0].gold_ade);
  CHECK(gold_pairs[1].gold_ade);

  const std::vector<EntitySpan> pred{{"P1", EntityKind::Drug, 0, 1}, {"P2", EntityKind::Disorder, 2, 3},
                                     {"P3", EntityKind::Drug, 6, 7}};
  auto pp = generate_candidates(d, pred, 4, PairSource::PredictedEntities);
  derive_pair_labels(pp, d, align_entities(pred, d.entities));
  REQUIRE(pp.size() == 2);
  CHECK(pp[0].gold_indication);
  CHECK(!pp[0].gold_ade);
  CHECK(!pp[1].gold_indication);  // P3 is unaligned
  CHECK(!pp[1].gold_ade);
}

TEST_CASE("feature layouts have the declared widths and offsets") {
  const auto t = FeatureLayout::transformer(768, 8);
  CHECK(t.size() == 3088);
  CHECK(t.segment("context.drug_sentence").offset == 0);
  CHECK(t.segment("context.disorder_sentence").offset == 768);
  CHECK(t.segment("entity.drug").offset == 1536);
  CHECK(t.segment("entity.disorder").offset == 2304);
  CHECK(t.segment("probs.drug").offset == 3072);
  CHECK(t.segment("probs.disorder").offset == 3080);

  const auto b = FeatureLayout::bilstm(300, 256, 5);
  CHECK(b.size() == 2234);
  CHECK(b.segment("static.disorder_sentence").offset == 900);
  CHECK(b.segment("hidden.drug").offset == 1200);
  CHECK(b.segment("hidden.disorder_sentence").offset == 1968);
  CHECK(b.segment("probs.drug").offset == 2224);
  CHECK(b.segment("probs.disorder").offset == 2229);
  CHECK(feature_layout_from_json(to_json(b)) == b);
  CHECK_THROWS(b.segment("nope"));
}

TEST_CASE("assembled features take means over the right rows") {
  std::mt19937_64 rng(5);
  Document d = six_sentences();
  d.entities = {{"A", EntityKind::Drug, 0, 2}, {"C", EntityKind::Disorder, 7, 8}};
  const auto pairs = generate_candidates(d, d.entities);
  REQUIRE(pairs.size() == 1);

  const auto layout = FeatureLayout::bilstm(4, 6, 5);
  const Matrix tok = oracle::random_matrix(18, 4, rng), hid = oracle::random_matrix(18, 6, rng);
  Matrix prob(18, 5);
  for (std::size_t t = 0; t < 18; ++t) prob(t, t % 5) = 1.0;
  const auto v = assemble_features(d, pairs[0], {&tok, &hid, nullptr, &prob}, layout);
  REQUIRE(v.size() == layout.size());
  CHECK(v[layout.segment("static.drug").offset] == doctest::Approx((tok(0, 0) + tok(1, 0)) / 2));
  CHECK(v[layout.segment("static.disorder_sentence").offset + 1] ==
        doctest::Approx((tok(6, 1) + tok(7, 1) + tok(8, 1)) / 3));
  CHECK(v[layout.segment("hidden.disorder").offset + 5] == doctest::Approx(hid(7, 5)));
  for (std::size_t j = 0; j < 5; ++j) CHECK(v[layout.segment("probs.disorder").offset + j] == prob(7, j));

  const auto tl = FeatureLayout::transformer(4, 8);
  const Matrix ctx = oracle::random_matrix(6, 4, rng);
  const Matrix p8 = lift_core5_probabilities(prob);
  const auto w = assemble_features(d, pairs[0], {&tok, nullptr, &ctx, &p8}, tl);
  CHECK(w.size() == tl.size());
  CHECK(w[tl.segment("context.disorder_sentence").offset + 2] == ctx(2, 2));
  CHECK(w[tl.segment("probs.disorder").offset + 3 + 2] == 1.0);

  CHECK_THROWS_AS(assemble_features(d, pairs[0], {&tok, nullptr, nullptr, &prob}, layout), ShapeError);
}

TEST_CASE("pair and feature files round trip") {
  Document d = six_sentences();
  d.entities = {{"A", EntityKind::Drug, 0, 2}, {"C", EntityKind::Disorder, 7, 8}};
  auto pairs = generate_candidates(d, d.entities);
  pairs[0].gold_ade = true;
  std::stringstream buf;
  write_pairs_jsonl(buf, pairs);
  const auto back = read_pairs_jsonl(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].gold_ade);
  CHECK(back[0].disorder.token_start == 7);
  CHECK(back[0].sentence_distance == 2);

  std::stringstream bad("{\"doc\":1}\n");
  CHECK_THROWS_AS(read_pairs_jsonl(bad), ParseError);

  Matrix m(2, 3);
  m(1, 2) = 0.125;
  std::stringstream fb;
  write_feature_matrix(fb, m);
  CHECK(read_feature_matrix(fb) == m);
}
