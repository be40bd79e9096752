// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the code under test for the value
// it is checking.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "clinrel/corpus/document.hpp"
#include "clinrel/matrix.hpp"
#include "clinrel/metrics/metrics.hpp"
#include "clinrel/tagger/crf.hpp"

namespace oracle {

using clinrel::Matrix;

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = n(rng);
  return m;
}

/// CRF with free random parameters (no pinned entries).
inline clinrel::CrfParams random_crf(std::size_t k, std::mt19937_64& rng) {
  auto crf = clinrel::CrfParams::unconstrained(k);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : crf.transitions().values()) v = n(rng);
  for (double& v : crf.start()) v = n(rng);
  for (double& v : crf.end()) v = n(rng);
  return crf;
}

/// Path score by direct summation along the chain, left to right.
inline double path_score(const Matrix& em, const clinrel::CrfParams& crf, const std::vector<std::size_t>& y) {
  double s = crf.start()[y[0]] + em(0, y[0]);
  for (std::size_t t = 1; t < y.size(); ++t) s = s + crf.transitions()(y[t - 1], y[t]) + em(t, y[t]);
  return s + crf.end()[y.back()];
}

struct Enumeration {
  double log_partition = -std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_path;
};

/// Visits every one of the K^T label paths.
inline Enumeration enumerate_paths(const Matrix& em, const clinrel::CrfParams& crf) {
  const std::size_t T = em.rows(), K = em.cols();
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) total *= K;
  std::vector<double> scores;
  std::vector<std::size_t> y(T);
  Enumeration e;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t t = T; t-- > 0; c /= K) y[t] = c % K;
    const double s = path_score(em, crf, y);
    scores.push_back(s);
    if (s > e.best) {
      e.best = s;
      e.best_path = y;
    }
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  if (std::isinf(m)) return e;
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - m);
  e.log_partition = m + std::log(acc);
  return e;
}

/// |a - b| / max(|a|, |b|); components smaller than `floor` in magnitude
/// are compared against the floor instead.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of `f` around the current value of `x`, restoring it.
inline double central_difference(double& x, const std::function<double()>& f, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

/// A document of `n` tokens in sentences of random length with random
/// non-overlapping spans whose ids follow position order (T1, T2, ...).
inline clinrel::Document random_document(std::size_t n, std::mt19937_64& rng) {
  clinrel::Document d;
  d.id = "rand";
  std::size_t sent = 0;
  std::uniform_int_distribution<int> coin(0, 5);
  for (std::size_t i = 0; i < n; ++i) {
    if (!d.text.empty()) d.text += ' ';
    const std::size_t s = d.text.size();
    d.text += "w" + std::to_string(i);
    d.tokens.push_back({"w" + std::to_string(i), s, d.text.size(), sent});
    if (coin(rng) == 0) ++sent;
  }
  std::size_t t = 0;
  std::uniform_int_distribution<std::size_t> gap(0, 3), len(1, 4);
  while (true) {
    t += gap(rng);
    const std::size_t l = len(rng);
    if (t + l > n) break;
    const auto kind = coin(rng) % 2 ? clinrel::EntityKind::Drug : clinrel::EntityKind::Disorder;
    d.entities.push_back({"T" + std::to_string(d.entities.size() + 1), kind, t, t + l});
    t += l;
  }
  return d;
}

/// Fraction of groups detected: easy needs one member pair predicted, hard all.
inline std::pair<double, double> group_fractions(const std::vector<std::vector<clinrel::PairKey>>& groups,
                                                 const std::set<clinrel::PairKey>& predicted) {
  std::size_t easy = 0, hard = 0;
  for (const auto& g : groups) {
    std::size_t hit = 0;
    for (const auto& m : g) hit += predicted.count(m);
    easy += hit > 0;
    hard += hit == g.size();
  }
  const double n = static_cast<double>(groups.size());
  return {easy / n, hard / n};
}

/// F-beta of the rule `score >= threshold`, from raw counts.
inline double f_at(const std::vector<double>& scores, const std::vector<bool>& labels, double threshold, double beta) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool p = scores[i] >= threshold;
    tp += p && labels[i];
    fp += p && !labels[i];
    fn += !p && labels[i];
  }
  const double b2 = beta * beta;
  const double denom = (1 + b2) * tp + b2 * fn + fp;
  return denom == 0 ? 0.0 : (1 + b2) * tp / denom;
}

/// Best threshold over the distinct scores; the highest one among equals.
inline std::pair<double, double> best_threshold(const std::vector<double>& scores, const std::vector<bool>& labels,
                                                double beta) {
  std::vector<double> cand(scores);
  std::sort(cand.begin(), cand.end(), std::greater<>());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double best_t = cand.front(), best_f = -1.0;
  for (double t : cand) {
    const double f = f_at(scores, labels, t, beta);
    if (f > best_f) {
      best_f = f;
      best_t = t;
    }
  }
  return {best_t, best_f};
}

/// Whether `p` lies on a segment from some row x of `pts` to one of the k
/// rows nearest to x (excluding x). Distance ties at the k-th place admit
/// every tied row.
inline bool on_knn_segment(std::span<const double> p, const Matrix& pts, std::size_t k, double tol = 1e-9) {
  const std::size_t n = pts.rows(), d = pts.cols();
  auto dist2 = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += (pts(a, j) - pts(b, j)) * (pts(a, j) - pts(b, j));
    return s;
  };
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> ds;
    for (std::size_t y = 0; y < n; ++y)
      if (y != x) ds.push_back(dist2(x, y));
    std::sort(ds.begin(), ds.end());
    const double kth = ds[std::min(k, ds.size()) - 1];
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x || dist2(x, y) > kth) continue;
      // p = x + lambda (y - x): solve for lambda on the largest coordinate gap
      std::size_t j0 = 0;
      for (std::size_t j = 1; j < d; ++j)
        if (std::abs(pts(y, j) - pts(x, j)) > std::abs(pts(y, j0) - pts(x, j0))) j0 = j;
      const double gap = pts(y, j0) - pts(x, j0);
      if (gap == 0) continue;
      const double lambda = (p[j0] - pts(x, j0)) / gap;
      if (lambda < -tol || lambda > 1 + tol) continue;
      bool ok = true;
      for (std::size_t j = 0; j < d && ok; ++j) ok = std::abs(pts(x, j) + lambda * (pts(y, j) - pts(x, j)) - p[j]) <= tol;
      if (ok) return true;
    }
  }
  return false;
}

}  // namespace oracle
