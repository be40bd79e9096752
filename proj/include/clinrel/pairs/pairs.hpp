#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinrel/corpus/document.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel {

enum class PairSource { GoldEntities, PredictedEntities };

std::string_view to_string(PairSource s) noexcept;
std::optional<PairSource> parse_pair_source(std::string_view s) noexcept;

struct CandidatePair {
  std::string doc_id;
  EntitySpan drug;
  EntitySpan disorder;
  std::size_t sentence_distance = 0;
  bool gold_ade = false;
  bool gold_indication = false;
  PairSource source = PairSource::GoldEntities;
};

/// Every (drug, disorder) pair at most `window` sentences apart, ordered by
/// drug token_start then disorder token_start.
std::vector<CandidatePair> generate_candidates(const Document& doc, std::span<const EntitySpan> entities,
                                               std::size_t window = 4,
                                               PairSource source = PairSource::GoldEntities);

/// predicted id -> gold id.
using EntityAlignment = std::map<std::string, std::string, std::less<>>;

/// A predicted span aligns to a same-kind gold span it overlaps; the largest
/// overlap wins, then the smallest gold token_start.
EntityAlignment align_entities(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold);
/// Only identical kind and token range align.
EntityAlignment align_entities_exact(std::span<const EntitySpan> predicted, std::span<const EntitySpan> gold);
EntityAlignment identity_alignment(std::span<const EntitySpan> entities);

/// Sets gold_ade / gold_indication from the relations of `doc` through `alignment`.
void derive_pair_labels(std::span<CandidatePair> pairs, const Document& doc, const EntityAlignment& alignment);

enum class LayoutKind { Transformer, BiLstm };

std::string_view to_string(LayoutKind k) noexcept;
std::optional<LayoutKind> parse_layout_kind(std::string_view s) noexcept;

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Named, fixed-order segments of a pair feature vector.
///
/// transformer: ctx(drug sent), ctx(disorder sent), entity(drug), entity(disorder), probs(drug), probs(disorder)
/// bilstm: static means of drug, disorder, drug sentence, disorder sentence; the
///         same four over encoder states; probs(drug), probs(disorder)
class FeatureLayout {
 public:
  FeatureLayout() = default;
  static FeatureLayout transformer(std::size_t token_dim = 768, std::size_t prob_dim = 8);
  static FeatureLayout bilstm(std::size_t static_dim = 300, std::size_t hidden_dim = 256, std::size_t prob_dim = 5);

  LayoutKind kind() const noexcept { return kind_; }
  std::size_t token_dim() const noexcept { return token_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t prob_dim() const noexcept { return prob_dim_; }
  std::size_t size() const noexcept;
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const Segment& segment(std::string_view name) const;

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;

 private:
  FeatureLayout(LayoutKind kind, std::size_t token_dim, std::size_t hidden_dim, std::size_t prob_dim);
  LayoutKind kind_ = LayoutKind::Transformer;
  std::size_t token_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t prob_dim_ = 0;
  std::vector<Segment> segments_;
};

nlohmann::json to_json(const FeatureLayout& l);
FeatureLayout feature_layout_from_json(const nlohmann::json& j);

/// Non-owning per-document representations. `tokens` is T x token_dim
/// (static or contextual vectors); `hidden` is T x hidden_dim (bilstm layout);
/// `sentence_context` is S x token_dim (transformer layout); `probabilities`
/// is T x prob_dim.
struct DocumentRepresentations {
  const Matrix* tokens = nullptr;
  const Matrix* hidden = nullptr;
  const Matrix* sentence_context = nullptr;
  const Matrix* probabilities = nullptr;
};

/// Throws ShapeError when a representation is missing or mis-sized for `layout`.
std::vector<double> assemble_features(const Document& doc, const CandidatePair& pair,
                                      const DocumentRepresentations& reps, const FeatureLayout& layout);

/// One row per pair.
Matrix assemble_feature_matrix(const Document& doc, std::span<const CandidatePair> pairs,
                               const DocumentRepresentations& reps, const FeatureLayout& layout);

/// T x 5 core rows -> T x 8 extended rows (three leading zero columns).
Matrix lift_core5_probabilities(const Matrix& core);

void write_pairs_jsonl(std::ostream& out, std::span<const CandidatePair> pairs);
/// Inverse of write_pairs_jsonl. Throws ParseError with the line number.
std::vector<CandidatePair> read_pairs_jsonl(std::istream& in);

void write_feature_matrix(std::ostream& out, const Matrix& m);
Matrix read_feature_matrix(std::istream& in);
void write_feature_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_feature_matrix_file(const std::filesystem::path& path);

}  // namespace clinrel
