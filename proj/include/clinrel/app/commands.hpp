#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "clinrel/app/config.hpp"
#include "clinrel/app/synthetic.hpp"
#include "clinrel/pairs/pairs.hpp"

namespace clinrel::app {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // any other failure, reported with its stage
  kBadInput = 2,     // parse errors, missing files, bad configuration
  kIntegrity = 3,    // well-formed input breaking a corpus invariant
  kMismatch = 4,     // stored artefacts that do not fit the run
};

/// Flags shared by every command. Unset optionals leave the config value alone.
struct Options {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  std::optional<CorpusFormat> format;
  std::string threshold_metric = "f1";
};

/// Loads --config (or defaults) and applies --seed / --format.
RunConfig resolve_config(const Options& opts);

/// Runs `body`, logging and mapping exceptions onto exit codes.
int guarded(const char* command, const std::function<void()>& body);

int cmd_convert(const Options& opts, const std::filesystem::path& in);
int cmd_split(const Options& opts);
int cmd_train_ner(const Options& opts, int fold);
int cmd_predict_ner(const Options& opts, const std::filesystem::path& model, const std::filesystem::path& corpus);
int cmd_gen_pairs(const Options& opts, const std::filesystem::path& model, const std::filesystem::path& corpus,
                  PairSource source);
int cmd_rebalance(const Options& opts, const std::filesystem::path& pairs_dir, RelationLabel relation);
int cmd_train_rc(const Options& opts, const std::filesystem::path& train_dir, const std::filesystem::path& val_dir,
                 RelationLabel relation);
int cmd_tune_threshold(const Options& opts, const std::filesystem::path& scores);
int cmd_evaluate(const Options& opts, const std::filesystem::path& scores, const std::filesystem::path& thresholds);
int cmd_evaluate_ner(const Options& opts, const std::filesystem::path& predicted, const std::filesystem::path& gold);
int cmd_cross_validate(const Options& opts);
int cmd_doc_eval(const Options& opts, const std::filesystem::path& corpus, const std::filesystem::path& model_dir);
int cmd_pr_curve(const Options& opts, const std::filesystem::path& scores);
int cmd_synth(const Options& opts, const SyntheticOptions& synth, std::size_t dim, bool archive);

}  // namespace clinrel::app
