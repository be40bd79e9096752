#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clinrel/matrix.hpp"

namespace clinrel {

struct RebalanceConfig {
  double target_ratio = 0.4;
  std::size_t smote_k = 5;
  std::size_t minority_multiplier = 4;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// `count` points x + lambda (x_nn - x), with x drawn uniformly from the rows
/// of `minority` and x_nn one of its k nearest (Euclidean) minority rows.
/// Throws InsufficientMinorityError for fewer than two rows, ConfigError when k
/// is 0 or not below the row count.
Matrix smote_synthesize(const Matrix& minority, std::size_t k, std::size_t count, std::uint64_t seed);

/// Uniform sample without replacement, in input order. Throws SizingError
/// when target_count exceeds the population.
std::vector<std::size_t> undersample(std::span<const std::size_t> indices, std::size_t target_count,
                                     std::uint64_t seed);

struct LabelledSet {
  Matrix features;
  std::vector<int> labels;  // 0 or 1
};

/// Grows the smaller class (the positive one on ties) to multiplier x its size
/// with SMOTE, keeping every original point, then undersamples the other class
/// to round(minority' / ratio), capped at its size. Output order is shuffled.
/// Throws ClassMissingError when either class is empty.
LabelledSet rebalance(const Matrix& features, std::span<const int> labels, const RebalanceConfig& config);

}  // namespace clinrel
