#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "clinrel/tagger/tagger.hpp"
#include "clinrel/training.hpp"

namespace clinrel {

struct LogRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Discrete choices are sampled uniformly, rates log-uniformly.
struct SearchSpace {
  std::vector<int> num_layers;
  std::vector<int> hidden_total;
  std::vector<int> batch_size;
  std::vector<int> patience;
  std::vector<Scheduler> schedulers;
  LogRange learning_rate;
  LogRange weight_decay;

  /// The recurrent tagger's space: 1-3 layers, 64-512 hidden, lr 1e-5..1e-2, decay 1e-6..1e-1.
  static SearchSpace bilstm_default();
  /// Throws ConfigError when any dimension is empty or a range is not 0 < lo <= hi.
  void validate() const;
};

struct Trial {
  int index = 0;
  TaggerConfig config;
  double objective = 0.0;
};

struct SearchResult {
  TaggerConfig best;
  int best_trial = 0;
  std::vector<Trial> trials;
};

/// Samples `budget` configurations from `space` on top of `base` and keeps the
/// argmax of `objective` (first trial wins ties).
SearchResult random_search(const SearchSpace& space, const TaggerConfig& base, int budget, std::uint64_t seed,
                           const std::function<double(const TaggerConfig&)>& objective);

nlohmann::json to_json(const SearchResult& r);
void write_trial_log(const SearchResult& r, const std::filesystem::path& path);

}  // namespace clinrel
