#include "clinrel/tagger/search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "clinrel/error.hpp"

namespace clinrel {

SearchSpace SearchSpace::bilstm_default() {
  return {{1, 2, 3},
          {64, 128, 256, 512},
          {16, 32, 64},
          {3, 4, 5, 6},
          {Scheduler::ReduceOnPlateau, Scheduler::CosineAnnealing, Scheduler::OneCycle, Scheduler::Exponential},
          {1e-5, 1e-2},
          {1e-6, 1e-1}};
}

void SearchSpace::validate() const {
  if (num_layers.empty() || hidden_total.empty() || batch_size.empty() || patience.empty() || schedulers.empty())
    throw ConfigError("search space has an empty dimension");
  for (const auto& r : {learning_rate, weight_decay})
    if (!(r.lo > 0.0 && r.lo <= r.hi)) throw ConfigError("search range must satisfy 0 < lo <= hi");
}

namespace {

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

double log_uniform(LogRange r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(std::log(r.lo), std::log(r.hi));
  return std::clamp(std::exp(d(rng)), r.lo, r.hi);
}

}  // namespace

SearchResult random_search(const SearchSpace& space, const TaggerConfig& base, int budget, std::uint64_t seed,
                           const std::function<double(const TaggerConfig&)>& objective) {
  space.validate();
  if (budget < 1) throw ConfigError("search budget must be >= 1");
  std::mt19937_64 rng(seed);
  SearchResult out;
  for (int i = 0; i < budget; ++i) {
    TaggerConfig c = base;
    c.num_layers = pick(space.num_layers, rng);
    c.hidden_total = pick(space.hidden_total, rng);
    c.batch_size = pick(space.batch_size, rng);
    c.patience = pick(space.patience, rng);
    c.scheduler = pick(space.schedulers, rng);
    c.learning_rate = log_uniform(space.learning_rate, rng);
    c.weight_decay = log_uniform(space.weight_decay, rng);
    const double score = objective(c);
    out.trials.push_back({i, c, score});
    if (i == 0 || score > out.trials[static_cast<std::size_t>(out.best_trial)].objective) out.best_trial = i;
  }
  out.best = out.trials[static_cast<std::size_t>(out.best_trial)].config;
  return out;
}

nlohmann::json to_json(const SearchResult& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) trials.push_back({{"trial", t.index}, {"objective", t.objective}, {"config", to_json(t.config)}});
  return {{"best_trial", r.best_trial}, {"best", to_json(r.best)}, {"trials", trials}};
}

void write_trial_log(const SearchResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(r).dump(2) << '\n';
}

}  // namespace clinrel
