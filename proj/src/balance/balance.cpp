#include "clinrel/balance/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "clinrel/error.hpp"
#include "clinrel/simd/kernels.hpp"

namespace clinrel {

void RebalanceConfig::validate() const {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw ConfigError("balance.target_ratio must be in (0, 1]");
  if (smote_k < 1) throw ConfigError("balance.smote_k must be >= 1");
  if (minority_multiplier < 1) throw ConfigError("balance.minority_multiplier must be >= 1");
}

namespace {

// k nearest rows of each row, nearest first; equal distances keep the lower index.
std::vector<std::vector<std::size_t>> neighbours(const Matrix& m, std::size_t k) {
  const std::size_t n = m.rows();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < n; ++i) {
    d.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.emplace_back(simd::squared_distance(m.row(i), m.row(j)), j);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(d[r].second);
  }
  return out;
}

}  // namespace

Matrix smote_synthesize(const Matrix& minority, std::size_t k, std::size_t count, std::uint64_t seed) {
  const std::size_t n = minority.rows();
  if (n < 2) throw InsufficientMinorityError("SMOTE needs at least 2 minority points, got " + std::to_string(n));
  if (k == 0 || k >= n) throw ConfigError("SMOTE k must be in [1, " + std::to_string(n - 1) + "]");
  Matrix out(count, minority.cols());
  if (count == 0) return out;
  const auto nn = neighbours(minority, k);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_point(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_nn(0, k - 1);
  std::uniform_real_distribution<double> lambda(0.0, 1.0);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t i = pick_point(rng);
    const std::size_t j = nn[i][pick_nn(rng)];
    const double l = lambda(rng);
    const auto x = minority.row(i);
    const auto y = minority.row(j);
    auto o = out.row(s);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = x[c] + l * (y[c] - x[c]);
  }
  return out;
}

std::vector<std::size_t> undersample(std::span<const std::size_t> indices, std::size_t target_count,
                                     std::uint64_t seed) {
  if (target_count > indices.size())
    throw SizingError("cannot keep " + std::to_string(target_count) + " of " + std::to_string(indices.size()) +
                      " items");
  std::vector<std::size_t> out;
  out.reserve(target_count);
  std::mt19937_64 rng(seed);
  std::sample(indices.begin(), indices.end(), std::back_inserter(out), target_count, rng);
  return out;
}

LabelledSet rebalance(const Matrix& features, std::span<const int> labels, const RebalanceConfig& config) {
  config.validate();
  if (labels.size() != features.rows()) throw ShapeError("rebalance: one label per feature row is required");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] != 0 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw ClassMissingError("rebalance needs both classes present");

  const bool pos_minor = pos.size() <= neg.size();
  const auto& minor = pos_minor ? pos : neg;
  const auto& major = pos_minor ? neg : pos;
  const int minor_label = pos_minor ? 1 : 0;

  Matrix minor_rows(minor.size(), features.cols());
  for (std::size_t r = 0; r < minor.size(); ++r) std::ranges::copy(features.row(minor[r]), minor_rows.row(r).begin());

  const std::size_t grown = config.minority_multiplier * minor.size();
  const std::size_t extra = grown - minor.size();
  Matrix synth(0, features.cols());
  if (extra > 0) {
    const std::size_t k = std::min(config.smote_k, minor.size() > 1 ? minor.size() - 1 : 1);
    synth = smote_synthesize(minor_rows, k, extra, config.seed);
  }
  const auto wanted = static_cast<std::size_t>(std::llround(static_cast<double>(grown) / config.target_ratio));
  const auto kept = undersample(major, std::min(wanted, major.size()), config.seed + 1);

  const std::size_t total = grown + kept.size();
  LabelledSet out{Matrix(total, features.cols()), std::vector<int>(total)};
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed + 2);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t slot = 0;
  auto emit = [&](std::span<const double> row, int label) {
    const std::size_t r = order[slot++];
    std::ranges::copy(row, out.features.row(r).begin());
    out.labels[r] = label;
  };
  for (std::size_t r = 0; r < minor_rows.rows(); ++r) emit(minor_rows.row(r), minor_label);
  for (std::size_t r = 0; r < synth.rows(); ++r) emit(synth.row(r), minor_label);
  for (std::size_t i : kept) emit(features.row(i), 1 - minor_label);
  return out;
}

}  // namespace clinrel
