#include "clinrel/tagger/crf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clinrel/error.hpp"

namespace clinrel {

CrfParams CrfParams::unconstrained(std::size_t num_labels) {
  CrfParams p;
  p.transitions_ = Matrix(num_labels, num_labels);
  p.start_.assign(num_labels, 0.0);
  p.end_.assign(num_labels, 0.0);
  p.transition_free_.assign(num_labels * num_labels, true);
  p.start_free_.assign(num_labels, true);
  return p;
}

CrfParams CrfParams::for_label_set(const LabelSet& labels) {
  const std::size_t k = labels.size();
  CrfParams p = unconstrained(k);
  p.label_set_ = labels.id();
  for (std::size_t i = 0; i < k; ++i) {
    p.start_free_[i] = labels.allowed_start(i);
    for (std::size_t j = 0; j < k; ++j) p.transition_free_[i * k + j] = labels.allowed_transition(i, j);
  }
  p.enforce_pins();
  return p;
}

void CrfParams::enforce_pins() {
  const std::size_t k = num_labels();
  for (std::size_t i = 0; i < k; ++i) {
    if (!start_free_[i]) start_[i] = kNegInf;
    for (std::size_t j = 0; j < k; ++j)
      if (!transition_free_[i * k + j]) transitions_(i, j) = kNegInf;
  }
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

namespace {

void check_emissions(const Matrix& emissions, const CrfParams& crf) {
  if (emissions.rows() == 0) throw ShapeError("CRF needs at least one position");
  if (emissions.cols() != crf.num_labels())
    throw ShapeError("emission width " + std::to_string(emissions.cols()) + " does not match " +
                     std::to_string(crf.num_labels()) + " CRF labels");
}

void check_labels(const Matrix& emissions, const CrfParams& crf, std::span<const std::size_t> labels) {
  if (labels.size() != emissions.rows())
    throw ShapeError("label sequence length does not match emission rows");
  for (std::size_t y : labels)
    if (y >= crf.num_labels()) throw ShapeError("label index out of range");
}

/// alpha(t, y): log-sum of scores of all prefixes ending at y, emissions included.
Matrix forward_table(const Matrix& e, const CrfParams& crf) {
  const std::size_t T = e.rows(), K = e.cols();
  Matrix alpha(T, K);
  for (std::size_t y = 0; y < K; ++y) alpha(0, y) = crf.start()[y] + e(0, y);
  std::vector<double> scratch(K);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      for (std::size_t p = 0; p < K; ++p) scratch[p] = alpha(t - 1, p) + crf.transitions()(p, y);
      alpha(t, y) = log_sum_exp(scratch) + e(t, y);
    }
  }
  return alpha;
}

/// beta(t, y): log-sum of scores of all suffixes after position t given y_t = y, end included.
Matrix backward_table(const Matrix& e, const CrfParams& crf) {
  const std::size_t T = e.rows(), K = e.cols();
  Matrix beta(T, K);
  for (std::size_t y = 0; y < K; ++y) beta(T - 1, y) = crf.end()[y];
  std::vector<double> scratch(K);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t y = 0; y < K; ++y) {
      for (std::size_t n = 0; n < K; ++n) scratch[n] = crf.transitions()(y, n) + e(t + 1, n) + beta(t + 1, n);
      beta(t, y) = log_sum_exp(scratch);
    }
  }
  return beta;
}

double partition_from_alpha(const Matrix& alpha, const CrfParams& crf) {
  const std::size_t T = alpha.rows(), K = alpha.cols();
  std::vector<double> last(K);
  for (std::size_t y = 0; y < K; ++y) last[y] = alpha(T - 1, y) + crf.end()[y];
  return log_sum_exp(last);
}

}  // namespace

double crf_score(const Matrix& emissions, const CrfParams& crf, std::span<const std::size_t> labels) {
  check_emissions(emissions, crf);
  check_labels(emissions, crf, labels);
  double s = crf.start()[labels[0]] + crf.end()[labels.back()];
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += emissions(t, labels[t]);
    if (t > 0) s += crf.transitions()(labels[t - 1], labels[t]);
  }
  return std::isnan(s) ? kNegInf : s;
}

double crf_log_partition(const Matrix& emissions, const CrfParams& crf) {
  check_emissions(emissions, crf);
  return partition_from_alpha(forward_table(emissions, crf), crf);
}

Matrix crf_marginals(const Matrix& emissions, const CrfParams& crf) {
  check_emissions(emissions, crf);
  const Matrix alpha = forward_table(emissions, crf);
  const Matrix beta = backward_table(emissions, crf);
  const double log_z = partition_from_alpha(alpha, crf);
  Matrix m(emissions.rows(), emissions.cols());
  for (std::size_t t = 0; t < m.rows(); ++t)
    for (std::size_t y = 0; y < m.cols(); ++y) m(t, y) = std::exp(alpha(t, y) + beta(t, y) - log_z);
  return m;
}

CrfLoss crf_nll(const Matrix& emissions, const CrfParams& crf, std::span<const std::size_t> labels) {
  check_emissions(emissions, crf);
  check_labels(emissions, crf, labels);
  const std::size_t T = emissions.rows(), K = emissions.cols();
  const Matrix alpha = forward_table(emissions, crf);
  const Matrix beta = backward_table(emissions, crf);
  const double log_z = partition_from_alpha(alpha, crf);

  CrfLoss out;
  out.nll = log_z - crf_score(emissions, crf, labels);
  auto& g = out.gradients;
  g.emissions = Matrix(T, K);
  g.transitions = Matrix(K, K);
  g.start.assign(K, 0.0);
  g.end.assign(K, 0.0);

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < K; ++y) g.emissions(t, y) = std::exp(alpha(t, y) + beta(t, y) - log_z);
  for (std::size_t y = 0; y < K; ++y) {
    g.start[y] = g.emissions(0, y);
    g.end[y] = g.emissions(T - 1, y);
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t i = 0; i < K; ++i) {
      if (alpha(t, i) == kNegInf) continue;
      for (std::size_t j = 0; j < K; ++j) {
        const double tr = crf.transitions()(i, j);
        if (tr == kNegInf) continue;
        g.transitions(i, j) += std::exp(alpha(t, i) + tr + emissions(t + 1, j) + beta(t + 1, j) - log_z);
      }
    }
  }

  for (std::size_t t = 0; t < T; ++t) g.emissions(t, labels[t]) -= 1.0;
  g.start[labels[0]] -= 1.0;
  g.end[labels[T - 1]] -= 1.0;
  for (std::size_t t = 0; t + 1 < T; ++t) g.transitions(labels[t], labels[t + 1]) -= 1.0;

  for (std::size_t i = 0; i < K; ++i) {
    if (crf.start_pinned(i)) g.start[i] = 0.0;
    for (std::size_t j = 0; j < K; ++j)
      if (crf.transition_pinned(i, j)) g.transitions(i, j) = 0.0;
  }
  return out;
}

ViterbiResult crf_viterbi(const Matrix& emissions, const CrfParams& crf) {
  check_emissions(emissions, crf);
  const std::size_t T = emissions.rows(), K = emissions.cols();
  Matrix delta(T, K);
  std::vector<std::size_t> back(T * K, 0);
  for (std::size_t y = 0; y < K; ++y) delta(0, y) = crf.start()[y] + emissions(0, y);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t p = 0; p < K; ++p) {
        const double v = delta(t - 1, p) + crf.transitions()(p, y);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
      delta(t, y) = best + emissions(t, y);
      back[t * K + y] = arg;
    }
  }
  ViterbiResult r;
  std::size_t last = 0;
  for (std::size_t y = 0; y < K; ++y) {
    const double v = delta(T - 1, y) + crf.end()[y];
    if (v > r.score) {
      r.score = v;
      last = y;
    }
  }
  r.labels.assign(T, 0);
  r.labels[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) r.labels[t - 1] = back[t * K + r.labels[t]];
  return r;
}

}  // namespace clinrel
