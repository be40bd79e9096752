#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinrel/matrix.hpp"
#include "clinrel/pairs/pairs.hpp"

namespace clinrel {

/// Four affine layers, ReLU between them, logistic output.
struct MlpParams {
  std::vector<Matrix> weights;  // out x in
  std::vector<Matrix> biases;   // out x 1
  double dropout = 0.5;

  std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
  MlpParams zeros_like() const;

  /// He-uniform weights, zero biases.
  static MlpParams initialize(std::size_t input_dim, std::span<const std::size_t> hidden, double dropout,
                              std::uint64_t seed);

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct MlpTrace {
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each hidden layer
  std::vector<std::vector<double>> mask;    // dropout scale per hidden unit (1 in eval mode)
};

/// Pre-squash logit. Inverted dropout at rate params.dropout is applied to the
/// hidden activations only when `rng` is given. Throws ShapeError on width mismatch.
double mlp_logit(const MlpParams& params, std::span<const double> x, std::mt19937_64* rng = nullptr,
                 MlpTrace* trace = nullptr);

/// Probability in (0, 1). The dropout mask is drawn from `seed` in training mode.
double mlp_forward(const MlpParams& params, std::span<const double> x, bool train_mode = false,
                   std::uint64_t seed = 0);

/// Adds d(loss)/d(params) for one traced example with upstream logit gradient `dlogit`.
void mlp_backward(const MlpParams& params, const MlpTrace& trace, double dlogit, MlpParams& grads);

struct FocalLoss {
  double loss = 0.0;
  double dlogit = 0.0;
};

/// -alpha_t (1-p_t)^gamma log p_t with p clamped to [1e-7, 1-1e-7], and its
/// derivative with respect to the logit.
FocalLoss focal_loss(double p, int y, double gamma, double alpha);

enum class SelectionMetric { F1, F2, ValLoss };

std::string_view to_string(SelectionMetric m) noexcept;
std::optional<SelectionMetric> parse_selection_metric(std::string_view s) noexcept;

struct RcTrainConfig {
  std::vector<std::size_t> hidden{512, 128, 32};
  double dropout = 0.5;
  double learning_rate = 1e-6;
  std::size_t batch_size = 128;
  int max_epochs = 100;
  int patience = 20;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  SelectionMetric selection_metric = SelectionMetric::F1;

  void validate() const;
};

nlohmann::json to_json(const RcTrainConfig& c);
/// Unknown keys are rejected with ConfigError.
RcTrainConfig rc_config_from_json(const nlohmann::json& j, RcTrainConfig base = {});

struct RcEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;  // best over thresholds
  double val_f2 = 0.0;
  friend bool operator==(const RcEpoch&, const RcEpoch&) = default;
};

struct TrainedRc {
  MlpParams params;
  RcTrainConfig config;
  std::vector<RcEpoch> history;
  int best_epoch = 0;
  /// Validation scores of the retained checkpoint, for threshold selection.
  std::vector<double> validation_scores;

  void save(std::ostream& out, const FeatureLayout& layout) const;
  void save_file(const std::filesystem::path& path, const FeatureLayout& layout) const;
};

struct LoadedRc {
  TrainedRc model;
  FeatureLayout layout;
};

LoadedRc load_rc(std::istream& in);
LoadedRc load_rc_file(const std::filesystem::path& path);

/// Mini-batch Adam on the focal loss with early stopping on the selection metric.
/// Throws ConfigError on empty sets or mismatched widths.
TrainedRc train_rc(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                   std::span<const int> val_y, const RcTrainConfig& config, std::uint64_t seed);

/// Eval-mode probabilities, one per row.
std::vector<double> score_pairs(const MlpParams& params, const Matrix& features);

struct DocumentPrediction {
  bool label = false;
  double score = 0.0;
};

/// score = max pair score (0 with no pairs); label = score >= threshold.
DocumentPrediction predict_document(std::span<const double> scores, double threshold);

/// CSV `doc,pair,score,label`; pair is `drug_id:disorder_id`.
void write_scores_csv(std::ostream& out, std::span<const CandidatePair> pairs, std::span<const double> scores,
                      RelationLabel relation);

}  // namespace clinrel
