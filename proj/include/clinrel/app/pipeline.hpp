#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinrel/app/config.hpp"
#include "clinrel/corpus/document.hpp"
#include "clinrel/embed/contextual_archive.hpp"
#include "clinrel/embed/source.hpp"
#include "clinrel/embed/word_vectors.hpp"
#include "clinrel/metrics/metrics.hpp"
#include "clinrel/pairs/pairs.hpp"
#include "clinrel/relclass/relclass.hpp"
#include "clinrel/tagger/tagger.hpp"

namespace clinrel::app {

/// A failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Stored models or thresholds that do not fit the current run.
class ArtifactMismatchError : public Error {
 public:
  using Error::Error;
};

/// Owns the token representation source of a run.
class InputStore {
 public:
  static InputStore load(const RunConfig& config, const std::vector<Document>& corpus,
                         const std::filesystem::path& archive_override = {});
  explicit InputStore(WordVectorTable table);
  explicit InputStore(ContextualArchive archive);

  EncoderSource source() const;

 private:
  std::shared_ptr<const WordVectorTable> table_;
  std::shared_ptr<const ContextualArchive> archive_;
};

/// One document seen through one tagger.
struct DocumentView {
  const Document* doc = nullptr;
  Matrix inputs;
  TaggerAnalysis analysis;
  Matrix probabilities;  // rows in the layout's probability width
  const Matrix* context = nullptr;

  DocumentRepresentations representations() const;
};

FeatureLayout layout_for(const TrainedTagger& tagger, const EncoderSource& source);

DocumentView view_document(const Document& doc, const EncoderSource& source, const TrainedTagger& tagger);

enum class AlignMode { Lenient, Strict };

/// Candidate pairs over several documents with their feature rows.
struct PairSet {
  std::vector<CandidatePair> pairs;
  std::vector<std::size_t> view_index;  // which view each pair came from
  Matrix features;

  std::vector<int> labels(RelationLabel relation) const;
  std::vector<bool> flags(RelationLabel relation) const;
};

/// Gold pairs use the documents' own entities; predicted pairs use the
/// tagger's spans, labelled through overlap (lenient) or exact (strict) alignment.
PairSet build_pairs(std::span<const DocumentView> views, PairSource source, std::size_t window,
                    const FeatureLayout& layout, AlignMode align = AlignMode::Lenient, bool with_features = true);

/// Relabels the pairs of an existing set under another alignment mode.
PairSet relabel(const PairSet& set, std::span<const DocumentView> views, AlignMode align);

struct MetricKey {
  std::string task;
  std::string mode;
  std::string metric;
  auto operator<=>(const MetricKey&) const = default;
};

struct Thresholds {
  double f1 = 0.5;
  double f2 = 0.5;
};

/// Per-fold thresholds indexed by setting ("two_step", "end_to_end") then relation ("ade", "indication").
using ThresholdTable = std::map<std::string, std::map<std::string, Thresholds>>;

nlohmann::json to_json(const ThresholdTable& t);
ThresholdTable threshold_table_from_json(const nlohmann::json& j);

struct FoldResult {
  std::vector<std::pair<MetricKey, double>> values;  // canonical order
  ThresholdTable thresholds;
};

/// Trains and evaluates fold `fold`, writing its artefacts to `dir`.
FoldResult run_fold(const RunConfig& config, const std::vector<Document>& corpus, const EncoderSource& source,
                    const FoldPlan& plan, int fold, const std::filesystem::path& dir);

/// Mean and sample std of every metric across folds.
std::vector<ReportRow> summarize(const std::string& model, std::span<const FoldResult> folds);

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  std::vector<ReportRow> report;
};

/// Full k-fold protocol; writes folds.json, fold_<i>/, thresholds.json and report.csv under `out`.
CrossValidationResult cross_validate(const RunConfig& config, const std::filesystem::path& out);

struct DocEvalResult {
  /// Per fold, per threshold name ("f1", "f2").
  std::vector<std::map<std::string, DocumentScores>> folds;
  std::vector<ReportRow> report;
};

/// Document-level ADE detection on `corpus` with every fold model under
/// `model_dir` at its stored end-to-end F1 and F2 thresholds.
/// Throws ArtifactMismatchError when thresholds are missing or models do not fit.
DocEvalResult document_evaluation(const RunConfig& config, const std::vector<Document>& corpus,
                                  const EncoderSource& source, const std::filesystem::path& model_dir,
                                  const std::filesystem::path& out);

}  // namespace clinrel::app
