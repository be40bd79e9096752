#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinrel/corpus/document.hpp"
#include "clinrel/corpus/labels.hpp"
#include "clinrel/matrix.hpp"
#include "clinrel/tagger/bilstm.hpp"
#include "clinrel/tagger/crf.hpp"
#include "clinrel/training.hpp"

namespace clinrel {

/// Recurrent encoder over static vectors, or a plain linear head over frozen
/// contextual vectors.
enum class EncoderKind { BiLstm, Frozen };
enum class TaggerLoss { CrfNll, CrossEntropy };

std::string_view to_string(EncoderKind k) noexcept;
std::optional<EncoderKind> parse_encoder_kind(std::string_view s) noexcept;
std::string_view to_string(TaggerLoss l) noexcept;
std::optional<TaggerLoss> parse_tagger_loss(std::string_view s) noexcept;

struct TaggerConfig {
  EncoderKind encoder = EncoderKind::BiLstm;
  int num_layers = 1;
  /// Both directions combined, unless hidden_per_direction is set.
  int hidden_total = 256;
  bool hidden_per_direction = false;
  double learning_rate = 0.05;
  int batch_size = 16;
  double weight_decay = 0.0;
  Scheduler scheduler = Scheduler::ReduceOnPlateau;
  int patience = 3;
  int max_epochs = 10;
  double warmup_ratio = 0.2;
  double clip_norm = 5.0;
  TaggerLoss loss = TaggerLoss::CrfNll;

  std::size_t units_per_direction() const noexcept {
    return static_cast<std::size_t>(hidden_per_direction ? hidden_total : hidden_total / 2);
  }
  /// Throws ConfigError on an invalid setting.
  void validate() const;
};

nlohmann::json to_json(const TaggerConfig& c);
/// Unknown keys are rejected with ConfigError.
TaggerConfig tagger_config_from_json(const nlohmann::json& j, TaggerConfig base = {});

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double learning_rate = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TaggerHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  friend bool operator==(const TaggerHistory&, const TaggerHistory&) = default;
};

/// Trainable parameters: optional encoder, emission projection, CRF.
struct TaggerParams {
  std::optional<BiLstmParams> encoder;
  Matrix projection;  // K x feature width
  Matrix bias;        // K x 1
  CrfParams crf;
  friend bool operator==(const TaggerParams&, const TaggerParams&) = default;
};

struct TaggerGradients {
  std::optional<BiLstmParams> encoder;
  Matrix projection;
  Matrix bias;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;

  static TaggerGradients zeros_for(const TaggerParams& p);
  void scale(double s);
  double squared_norm() const;
};

/// Everything the tagger produces for one document.
struct TaggerAnalysis {
  Matrix hidden;         // T x encoder width (empty for the frozen path)
  Matrix emissions;      // T x K
  Matrix probabilities;  // T x K, softmax of emissions
  LabelSequence labels;  // Viterbi path, per sentence
  std::vector<EntitySpan> spans;
};

class TrainedTagger {
 public:
  TrainedTagger() = default;
  /// Fresh model with seeded random encoder/projection and zero CRF scores.
  static TrainedTagger initialize(const TaggerConfig& config, std::size_t input_dim, std::uint64_t seed);

  const TaggerConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  const LabelSet& labels() const { return LabelSet::core5(); }
  std::size_t feature_width() const noexcept;

  TaggerParams& params() noexcept { return params_; }
  const TaggerParams& params() const noexcept { return params_; }
  TaggerHistory& history() noexcept { return history_; }
  const TaggerHistory& history() const noexcept { return history_; }

  /// Encodes, scores and decodes each sentence of `doc`.
  /// `inputs` is T x input_dim; throws ShapeError otherwise.
  TaggerAnalysis analyze(const Document& doc, const Matrix& inputs) const;

  /// Encoder output and emissions for one sentence.
  Matrix sentence_hidden(const Matrix& inputs, BiLstmCache* cache = nullptr) const;
  Matrix sentence_emissions(const Matrix& hidden) const;

  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;
  static TrainedTagger load(std::istream& in);
  static TrainedTagger load_file(const std::filesystem::path& path);

 private:
  TaggerConfig config_;
  std::size_t input_dim_ = 0;
  TaggerParams params_;
  TaggerHistory history_;
};

/// Loss of one sentence under `params`; accumulates gradients when `grads` is given.
double sentence_loss(const TrainedTagger& model, const Matrix& inputs, std::span<const std::size_t> gold,
                     TaggerGradients* grads);

/// Row-wise softmax of the emissions; every row sums to 1.
Matrix token_probabilities(const TrainedTagger& model, const Document& doc, const Matrix& inputs);

struct EntityPrediction {
  std::vector<EntitySpan> spans;
  Matrix probabilities;
};

EntityPrediction predict_entities(const TrainedTagger& model, const Document& doc, const Matrix& inputs);

/// A document paired with its T x input_dim token inputs.
struct TaggerExample {
  const Document* doc = nullptr;
  Matrix inputs;
};

/// Mini-batch training with warmup, scheduling, clipping and early stopping on
/// validation strict micro-F1; returns the best-epoch checkpoint.
/// Throws ConfigError when either split is empty.
TrainedTagger train_tagger(std::span<const TaggerExample> train, std::span<const TaggerExample> validation,
                           const TaggerConfig& config, std::uint64_t seed);

/// Strict micro-F1 of `model` over `examples`.
double validation_f1(const TrainedTagger& model, std::span<const TaggerExample> examples);

}  // namespace clinrel
