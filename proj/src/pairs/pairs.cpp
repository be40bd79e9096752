#include "clinrel/pairs/pairs.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "clinrel/binary_io.hpp"
#include "clinrel/error.hpp"

namespace clinrel {

std::string_view to_string(PairSource s) noexcept {
  return s == PairSource::GoldEntities ? "gold" : "predicted";
}

std::optional<PairSource> parse_pair_source(std::string_view s) noexcept {
  if (s == "gold") return PairSource::GoldEntities;
  if (s == "predicted") return PairSource::PredictedEntities;
  return std::nullopt;
}

std::vector<CandidatePair> generate_candidates(const Document& doc, std::span<const EntitySpan> entities,
                                               std::size_t window, PairSource source) {
  std::vector<const EntitySpan*> drugs, disorders;
  for (const auto& e : entities) {
    if (e.token_end > doc.tokens.size() || e.token_start >= e.token_end)
      throw ShapeError("entity '" + e.id + "' lies outside document '" + doc.id + "'");
    (e.kind == EntityKind::Drug ? drugs : disorders).push_back(&e);
  }
  auto by_start = [](const EntitySpan* a, const EntitySpan* b) { return a->token_start < b->token_start; };
  std::ranges::stable_sort(drugs, by_start);
  std::ranges::stable_sort(disorders, by_start);

  std::vector<CandidatePair> out;
  for (const auto* d : drugs) {
    const std::size_t sd = doc.sentence_of(*d);
    for (const auto* s : disorders) {
      const std::size_t ss = doc.sentence_of(*s);
      const std::size_t dist = sd > ss ? sd - ss : ss - sd;
      if (dist > window) continue;
      out.push_back({doc.id, *d, *s, dist, false, false, source});
    }
  }
  return out;
}

EntityAlignment align_entities(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold) {
  EntityAlignment out;
  for (const auto& p : predicted) {
    const EntitySpan* best = nullptr;
    std::size_t best_overlap = 0;
    for (const auto& g : gold) {
      if (g.kind != p.kind || !g.overlaps(p)) continue;
      const std::size_t ov = std::min(g.token_end, p.token_end) - std::max(g.token_start, p.token_start);
      if (ov > best_overlap || (ov == best_overlap && best && g.token_start < best->token_start)) {
        best = &g;
        best_overlap = ov;
      }
    }
    if (best) out.emplace(p.id, best->id);
  }
  return out;
}

EntityAlignment align_entities_exact(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold) {
  EntityAlignment out;
  for (const auto& p : predicted)
    for (const auto& g : gold)
      if (g.same_extent(p)) {
        out.emplace(p.id, g.id);
        break;
      }
  return out;
}

EntityAlignment identity_alignment(std::span<const EntitySpan> entities) {
  EntityAlignment out;
  for (const auto& e : entities) out.emplace(e.id, e.id);
  return out;
}

void derive_pair_labels(std::span<CandidatePair> pairs, const Document& doc, const EntityAlignment& alignment) {
  for (auto& p : pairs) {
    p.gold_ade = p.gold_indication = false;
    const auto d = alignment.find(p.drug.id);
    const auto s = alignment.find(p.disorder.id);
    if (d == alignment.end() || s == alignment.end()) continue;
    for (const auto& r : doc.relations) {
      if (r.drug_id != d->second || r.disorder_id != s->second) continue;
      (r.label == RelationLabel::Ade ? p.gold_ade : p.gold_indication) = true;
    }
  }
}

std::string_view to_string(LayoutKind k) noexcept { return k == LayoutKind::Transformer ? "transformer" : "bilstm"; }

std::optional<LayoutKind> parse_layout_kind(std::string_view s) noexcept {
  if (s == "transformer") return LayoutKind::Transformer;
  if (s == "bilstm") return LayoutKind::BiLstm;
  return std::nullopt;
}

FeatureLayout::FeatureLayout(LayoutKind kind, std::size_t token_dim, std::size_t hidden_dim, std::size_t prob_dim)
    : kind_(kind), token_dim_(token_dim), hidden_dim_(hidden_dim), prob_dim_(prob_dim) {
  std::size_t off = 0;
  auto add = [&](std::string name, std::size_t width) {
    segments_.push_back({std::move(name), off, width});
    off += width;
  };
  if (kind == LayoutKind::Transformer) {
    add("context.drug_sentence", token_dim);
    add("context.disorder_sentence", token_dim);
    add("entity.drug", token_dim);
    add("entity.disorder", token_dim);
  } else {
    add("static.drug", token_dim);
    add("static.disorder", token_dim);
    add("static.drug_sentence", token_dim);
    add("static.disorder_sentence", token_dim);
    add("hidden.drug", hidden_dim);
    add("hidden.disorder", hidden_dim);
    add("hidden.drug_sentence", hidden_dim);
    add("hidden.disorder_sentence", hidden_dim);
  }
  add("probs.drug", prob_dim);
  add("probs.disorder", prob_dim);
}

FeatureLayout FeatureLayout::transformer(std::size_t token_dim, std::size_t prob_dim) {
  return {LayoutKind::Transformer, token_dim, 0, prob_dim};
}

FeatureLayout FeatureLayout::bilstm(std::size_t static_dim, std::size_t hidden_dim, std::size_t prob_dim) {
  return {LayoutKind::BiLstm, static_dim, hidden_dim, prob_dim};
}

std::size_t FeatureLayout::size() const noexcept {
  return segments_.empty() ? 0 : segments_.back().offset + segments_.back().width;
}

const Segment& FeatureLayout::segment(std::string_view name) const {
  for (const auto& s : segments_)
    if (s.name == name) return s;
  throw ShapeError("layout has no segment '" + std::string(name) + "'");
}

nlohmann::json to_json(const FeatureLayout& l) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : l.segments()) segs.push_back({{"name", s.name}, {"offset", s.offset}, {"width", s.width}});
  return {{"kind", to_string(l.kind())},
          {"token_dim", l.token_dim()},
          {"hidden_dim", l.hidden_dim()},
          {"prob_dim", l.prob_dim()},
          {"size", l.size()},
          {"segments", segs}};
}

FeatureLayout feature_layout_from_json(const nlohmann::json& j) {
  try {
    const auto kind = parse_layout_kind(j.at("kind").get<std::string>());
    if (!kind) throw ConfigError("unknown feature layout kind");
    const auto td = j.at("token_dim").get<std::size_t>();
    const auto pd = j.at("prob_dim").get<std::size_t>();
    return *kind == LayoutKind::Transformer ? FeatureLayout::transformer(td, pd)
                                            : FeatureLayout::bilstm(td, j.at("hidden_dim").get<std::size_t>(), pd);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("feature layout: ") + e.what());
  }
}

namespace {

void require_rows(const Matrix* m, std::size_t rows, std::size_t cols, const char* what, const Document& doc) {
  if (!m) throw ShapeError(std::string(what) + " missing for document '" + doc.id + "'");
  if (m->rows() != rows || m->cols() != cols)
    throw ShapeError(std::string(what) + " for document '" + doc.id + "' is " + std::to_string(m->rows()) + "x" +
                     std::to_string(m->cols()) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

// Mean of rows [b, e) of m, written at out[offset..].
void mean_rows(const Matrix& m, std::size_t b, std::size_t e, std::vector<double>& out, std::size_t offset) {
  const double inv = 1.0 / static_cast<double>(e - b);
  for (std::size_t t = b; t < e; ++t) {
    const auto r = m.row(t);
    for (std::size_t j = 0; j < r.size(); ++j) out[offset + j] += r[j];
  }
  for (std::size_t j = 0; j < m.cols(); ++j) out[offset + j] *= inv;
}

std::pair<std::size_t, std::size_t> sentence_range(const Document& doc, std::size_t sentence) {
  auto lo = std::ranges::find_if(doc.tokens, [&](const Token& t) { return t.sentence_index == sentence; });
  auto hi = std::find_if(lo, doc.tokens.end(), [&](const Token& t) { return t.sentence_index != sentence; });
  return {static_cast<std::size_t>(lo - doc.tokens.begin()), static_cast<std::size_t>(hi - doc.tokens.begin())};
}

}  // namespace

std::vector<double> assemble_features(const Document& doc, const CandidatePair& pair,
                                      const DocumentRepresentations& reps, const FeatureLayout& layout) {
  const std::size_t n = doc.tokens.size();
  for (const auto* e : {&pair.drug, &pair.disorder})
    if (e->token_end > n || e->token_start >= e->token_end)
      throw ShapeError("entity '" + e->id + "' lies outside document '" + doc.id + "'");
  require_rows(reps.tokens, n, layout.token_dim(), "token vectors", doc);
  require_rows(reps.probabilities, n, layout.prob_dim(), "probability rows", doc);

  std::vector<double> out(layout.size(), 0.0);
  auto put = [&](std::string_view seg, const Matrix& m, std::size_t b, std::size_t e) {
    mean_rows(m, b, e, out, layout.segment(seg).offset);
  };
  const auto& d = pair.drug;
  const auto& s = pair.disorder;

  if (layout.kind() == LayoutKind::Transformer) {
    require_rows(reps.sentence_context, doc.sentence_count(), layout.token_dim(), "sentence context", doc);
    const std::size_t sd = doc.sentence_of(d);
    const std::size_t ss = doc.sentence_of(s);
    put("context.drug_sentence", *reps.sentence_context, sd, sd + 1);
    put("context.disorder_sentence", *reps.sentence_context, ss, ss + 1);
    put("entity.drug", *reps.tokens, d.token_start, d.token_end);
    put("entity.disorder", *reps.tokens, s.token_start, s.token_end);
  } else {
    require_rows(reps.hidden, n, layout.hidden_dim(), "encoder states", doc);
    const auto [db, de] = sentence_range(doc, doc.sentence_of(d));
    const auto [sb, se] = sentence_range(doc, doc.sentence_of(s));
    put("static.drug", *reps.tokens, d.token_start, d.token_end);
    put("static.disorder", *reps.tokens, s.token_start, s.token_end);
    put("static.drug_sentence", *reps.tokens, db, de);
    put("static.disorder_sentence", *reps.tokens, sb, se);
    put("hidden.drug", *reps.hidden, d.token_start, d.token_end);
    put("hidden.disorder", *reps.hidden, s.token_start, s.token_end);
    put("hidden.drug_sentence", *reps.hidden, db, de);
    put("hidden.disorder_sentence", *reps.hidden, sb, se);
  }
  put("probs.drug", *reps.probabilities, d.token_start, d.token_end);
  put("probs.disorder", *reps.probabilities, s.token_start, s.token_end);
  return out;
}

Matrix assemble_feature_matrix(const Document& doc, std::span<const CandidatePair> pairs,
                               const DocumentRepresentations& reps, const FeatureLayout& layout) {
  Matrix m(pairs.size(), layout.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto v = assemble_features(doc, pairs[i], reps, layout);
    std::ranges::copy(v, m.row(i).begin());
  }
  return m;
}

Matrix lift_core5_probabilities(const Matrix& core) {
  if (core.cols() != 5) throw ShapeError("expected 5 probability columns, got " + std::to_string(core.cols()));
  Matrix out(core.rows(), 8);
  for (std::size_t t = 0; t < core.rows(); ++t)
    for (std::size_t j = 0; j < 5; ++j) out(t, 3 + j) = core(t, j);
  return out;
}

void write_pairs_jsonl(std::ostream& out, std::span<const CandidatePair> pairs) {
  for (const auto& p : pairs) {
    const nlohmann::json j{{"doc", p.doc_id},
                           {"drug_id", p.drug.id},
                           {"disorder_id", p.disorder.id},
                           {"drug", {p.drug.token_start, p.drug.token_end}},
                           {"disorder", {p.disorder.token_start, p.disorder.token_end}},
                           {"dist", p.sentence_distance},
                           {"ade", p.gold_ade},
                           {"ind", p.gold_indication},
                           {"source", to_string(p.source)}};
    out << j.dump() << '\n';
  }
}

std::vector<CandidatePair> read_pairs_jsonl(std::istream& in) {
  std::vector<CandidatePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CandidatePair p;
      p.doc_id = j.at("doc").get<std::string>();
      p.drug = {j.at("drug_id").get<std::string>(), EntityKind::Drug, j.at("drug").at(0).get<std::size_t>(),
                j.at("drug").at(1).get<std::size_t>()};
      p.disorder = {j.at("disorder_id").get<std::string>(), EntityKind::Disorder,
                    j.at("disorder").at(0).get<std::size_t>(), j.at("disorder").at(1).get<std::size_t>()};
      p.sentence_distance = j.at("dist").get<std::size_t>();
      p.gold_ade = j.at("ade").get<bool>();
      p.gold_indication = j.at("ind").get<bool>();
      const auto src = parse_pair_source(j.at("source").get<std::string>());
      if (!src) throw ParseError("unknown pair source", lineno);
      p.source = *src;
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("pairs: ") + e.what(), lineno);
    }
  }
  return out;
}

void write_feature_matrix(std::ostream& out, const Matrix& m) {
  bin::write_magic(out, "FVS1");
  bin::write_u32(out, static_cast<std::uint32_t>(m.rows()));
  bin::write_u32(out, static_cast<std::uint32_t>(m.cols()));
  bin::write_f32_block(out, m);
}

Matrix read_feature_matrix(std::istream& in) {
  bin::Reader r(in, "FVS1");
  r.expect_magic("FVS1");
  const auto rows = r.u32();
  const auto cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols > (1ull << 30)) r.fail("matrix is implausibly large");
  return r.f32_block(rows, cols);
}

void write_feature_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_feature_matrix(out, m);
}

Matrix read_feature_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_feature_matrix(in);
}

}  // namespace clinrel
