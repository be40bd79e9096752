#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "clinrel/corpus/labels.hpp"
#include "clinrel/matrix.hpp"

namespace clinrel {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Linear-chain CRF parameters over K labels.
///
/// When built for a BIO label set, structurally invalid transitions
/// (O->I-x, B-y->I-x, I-y->I-x for y != x, start->I-x) are pinned to -inf.
/// Pinned entries receive zero gradient and are skipped by updates.
class CrfParams {
 public:
  CrfParams() = default;
  static CrfParams unconstrained(std::size_t num_labels);
  static CrfParams for_label_set(const LabelSet& labels);

  std::size_t num_labels() const noexcept { return start_.size(); }
  std::optional<LabelSetId> label_set() const noexcept { return label_set_; }

  Matrix& transitions() noexcept { return transitions_; }
  const Matrix& transitions() const noexcept { return transitions_; }
  std::vector<double>& start() noexcept { return start_; }
  const std::vector<double>& start() const noexcept { return start_; }
  std::vector<double>& end() noexcept { return end_; }
  const std::vector<double>& end() const noexcept { return end_; }

  bool transition_pinned(std::size_t from, std::size_t to) const {
    return !transition_free_[from * num_labels() + to];
  }
  bool start_pinned(std::size_t label) const { return !start_free_[label]; }

  /// Resets pinned entries to -inf (after loading or an update).
  void enforce_pins();

  friend bool operator==(const CrfParams&, const CrfParams&) = default;

 private:
  Matrix transitions_;
  std::vector<double> start_;
  std::vector<double> end_;
  std::vector<bool> transition_free_;
  std::vector<bool> start_free_;
  std::optional<LabelSetId> label_set_;
};

/// Gradients with the same layout as CrfParams, plus emission gradients.
struct CrfGradients {
  Matrix emissions;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> end;
};

double log_sum_exp(std::span<const double> values);

/// start[y1] + sum emissions[t, y_t] + sum transitions[y_t, y_t+1] + end[yT].
/// Returns -inf for a sequence that uses a pinned transition.
double crf_score(const Matrix& emissions, const CrfParams& crf, std::span<const std::size_t> labels);

/// log of the sum over all K^T paths of exp(score), by the forward recursion.
double crf_log_partition(const Matrix& emissions, const CrfParams& crf);

/// Per-position label marginals, T x K.
Matrix crf_marginals(const Matrix& emissions, const CrfParams& crf);

struct CrfLoss {
  double nll = 0.0;
  CrfGradients gradients;
};

/// Negative log-likelihood of `labels` and its gradient
/// (expected counts minus observed counts).
CrfLoss crf_nll(const Matrix& emissions, const CrfParams& crf, std::span<const std::size_t> labels);

struct ViterbiResult {
  std::vector<std::size_t> labels;
  double score = kNegInf;
};

/// Highest-scoring path; ties resolve to the lowest label index.
ViterbiResult crf_viterbi(const Matrix& emissions, const CrfParams& crf);

}  // namespace clinrel
