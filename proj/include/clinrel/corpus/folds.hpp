#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clinrel {

enum class Role { Train, Validation, Test };

std::string_view to_string(Role role) noexcept;

struct FoldRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

/// Per-fold train/validation/test assignment of a corpus.
struct FoldPlan {
  std::uint64_t seed = 0;
  int k = 0;
  FoldRatios ratios;
  std::vector<std::string> doc_ids;
  /// roles[fold][i] is the role of doc_ids[i] in that fold.
  std::vector<std::vector<Role>> roles;

  std::vector<std::string> ids(int fold, Role role) const;
  std::vector<std::size_t> indices(int fold, Role role) const;
};

/// Deterministic k-fold plan. Documents are shuffled once by `seed`; fold f
/// takes its test block starting at floor(f*n/k), the validation block right
/// after it (cyclically) and trains on the remainder. With test = 1/k the test
/// blocks partition the corpus.
/// Throws ConfigError on bad k/ratios and SizingError when |doc_ids| < k.
FoldPlan split_folds(const std::vector<std::string>& doc_ids, int k, FoldRatios ratios,
                     std::uint64_t seed);

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

}  // namespace clinrel
