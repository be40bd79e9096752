#include "clinrel/corpus/folds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "clinrel/error.hpp"

namespace clinrel {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Train:
      return "train";
    case Role::Validation:
      return "val";
    case Role::Test:
      return "test";
  }
  return "?";
}

std::vector<std::string> FoldPlan::ids(int fold, Role role) const {
  std::vector<std::string> out;
  for (std::size_t i : indices(fold, role)) out.push_back(doc_ids[i]);
  return out;
}

std::vector<std::size_t> FoldPlan::indices(int fold, Role role) const {
  std::vector<std::size_t> out;
  const auto& r = roles.at(static_cast<std::size_t>(fold));
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] == role) out.push_back(i);
  return out;
}

FoldPlan split_folds(const std::vector<std::string>& doc_ids, int k, FoldRatios ratios,
                     std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be at least 2");
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0)
    throw ConfigError("split ratios must be positive");
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  const std::size_t n = doc_ids.size();
  if (n < static_cast<std::size_t>(k))
    throw SizingError("need at least " + std::to_string(k) + " documents for " + std::to_string(k) +
                      " folds, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.seed = seed;
  plan.k = k;
  plan.ratios = ratios;
  plan.doc_ids = doc_ids;
  constexpr double kSlack = 1e-9;
  const double dn = static_cast<double>(n);
  for (int f = 0; f < k; ++f) {
    const double start = static_cast<double>(f) * dn / k;
    const auto test_begin = static_cast<std::size_t>(std::floor(start + kSlack));
    const auto test_end = static_cast<std::size_t>(std::floor(start + ratios.test * dn + kSlack));
    const auto val_end =
        static_cast<std::size_t>(std::floor(start + (ratios.test + ratios.validation) * dn + kSlack));
    std::vector<Role> roles(n, Role::Train);
    for (std::size_t p = test_begin; p < val_end; ++p) {
      roles[order[p % n]] = p < test_end ? Role::Test : Role::Validation;
    }
    plan.roles.push_back(std::move(roles));
  }
  return plan;
}

nlohmann::json to_json(const FoldPlan& plan) {
  nlohmann::json folds = nlohmann::json::array();
  for (int f = 0; f < plan.k; ++f) {
    folds.push_back({{"train", plan.ids(f, Role::Train)},
                     {"val", plan.ids(f, Role::Validation)},
                     {"test", plan.ids(f, Role::Test)}});
  }
  return {{"seed", plan.seed},
          {"k", plan.k},
          {"ratios", {plan.ratios.train, plan.ratios.validation, plan.ratios.test}},
          {"doc_ids", plan.doc_ids},
          {"folds", folds}};
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
  try {
    FoldPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.k = j.at("k").get<int>();
    const auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw ConfigError("fold plan ratios must have three entries");
    plan.ratios = {r[0], r[1], r[2]};
    plan.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    const auto& folds = j.at("folds");
    if (folds.size() != static_cast<std::size_t>(plan.k)) throw ConfigError("fold plan fold count mismatch");
    for (const auto& fold : folds) {
      std::vector<Role> roles(plan.doc_ids.size(), Role::Train);
      std::vector<bool> seen(plan.doc_ids.size(), false);
      for (auto [key, role] : {std::pair{"train", Role::Train}, std::pair{"val", Role::Validation},
                               std::pair{"test", Role::Test}}) {
        for (const auto& id : fold.at(key).get<std::vector<std::string>>()) {
          auto it = std::find(plan.doc_ids.begin(), plan.doc_ids.end(), id);
          if (it == plan.doc_ids.end()) throw ConfigError("fold plan names unknown document '" + id + "'");
          const auto i = static_cast<std::size_t>(it - plan.doc_ids.begin());
          if (seen[i]) throw ConfigError("document '" + id + "' has two roles in one fold");
          seen[i] = true;
          roles[i] = role;
        }
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ConfigError("fold plan leaves a document without a role");
      plan.roles.push_back(std::move(roles));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed fold plan: ") + e.what());
  }
}

}  // namespace clinrel
