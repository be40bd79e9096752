#include <doctest.h>

#include <sstream>

#include "clinrel/embed/contextual_archive.hpp"
#include "clinrel/embed/source.hpp"
#include "clinrel/embed/word_vectors.hpp"
#include "clinrel/error.hpp"

using namespace clinrel;

namespace {

Document four_tokens() {
  Document d;
  d.id = "a";
  d.text = "w x y z";
  for (std::size_t i = 0; i < 4; ++i) d.tokens.push_back({std::string(1, d.text[2 * i]), 2 * i, 2 * i + 1, i / 2});
  return d;
}

}  // namespace

TEST_CASE("word vector text format") {
  std::istringstream in("2 3\nfever 1 2 3\nrash -1 0 0.5\n");
  const auto t = load_word_vectors(in);
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  CHECK(t.lookup("fever")[2] == 3.0);
  for (double v : t.lookup("Fever")) CHECK(v == 0.0);
  for (double v : t.lookup("unknown")) CHECK(v == 0.0);

  std::istringstream short_line("1 3\nfever 1 2\n");
  CHECK_THROWS_AS(load_word_vectors(short_line), ParseError);

  std::ostringstream wide;
  wide << "1 300\nw";
  for (int i = 0; i < 300; ++i) wide << ' ' << i;
  std::istringstream wide_in(wide.str() + "\n");
  CHECK(load_word_vectors(wide_in).dim() == 300);

  std::ostringstream out;
  t.write(out);
  std::istringstream back(out.str());
  const auto u = load_word_vectors(back);
  CHECK(u.lookup("rash")[2] == 0.5);
}

TEST_CASE("contextual archives are checked against the corpus") {
  const std::vector<Document> corpus{four_tokens()};
  ContextualArchive a(768);
  a.add("a", {Matrix(4, 768, 0.25), Matrix(2, 768), std::nullopt});
  std::stringstream buf;
  a.write(buf);
  const auto loaded = load_contextual_archive(buf, corpus);
  CHECK(loaded.at("a").token_vectors.rows() == 4);
  CHECK(loaded.at("a").token_vectors.cols() == 768);
  CHECK(loaded.at("a").token_vectors(3, 767) == 0.25);

  ContextualArchive bad(768);
  bad.add("a", {Matrix(3, 768), Matrix(2, 768), std::nullopt});
  std::stringstream buf2;
  bad.write(buf2);
  CHECK_THROWS_AS(load_contextual_archive(buf2, corpus), AlignmentError);

  ContextualArchive empty(8);
  std::stringstream buf3;
  empty.write(buf3);
  CHECK(load_contextual_archive(buf3, {}).size() == 0);
}

TEST_CASE("encoder sources expose token inputs") {
  const Document d = four_tokens();
  WordVectorTable t(2);
  const std::vector<double> v{1.0, -1.0};
  t.insert("x", v);
  EncoderSource s(t);
  CHECK(s.is_static());
  const Matrix m = s.token_inputs(d);
  CHECK(m.rows() == 4);
  CHECK(m(1, 0) == 1.0);
  CHECK(m(0, 0) == 0.0);
}
