#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "clinrel/balance/balance.hpp"
#include "clinrel/corpus/folds.hpp"
#include "clinrel/corpus/io.hpp"
#include "clinrel/relclass/relclass.hpp"
#include "clinrel/tagger/tagger.hpp"

namespace clinrel::app {

std::string_view version() noexcept;

/// Static word vectors feed the recurrent tagger; a contextual archive feeds
/// the frozen linear tagger.
enum class InputKind { StaticVectors, ContextualArchive };

struct RunConfig {
  std::uint64_t seed = 13;
  std::string model = "bilstm-crf";
  std::filesystem::path corpus;
  CorpusFormat format = CorpusFormat::Jsonl;
  InputKind input = InputKind::StaticVectors;
  std::filesystem::path word_vectors;
  std::filesystem::path archive;
  int folds = 5;
  FoldRatios ratios;
  TaggerConfig ner;
  std::size_t window = 4;
  RebalanceConfig balance;
  RcTrainConfig rc;
};

/// Strict parse: unknown keys anywhere raise ConfigError. Relative paths are
/// resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Writes config.json (resolved) and VERSION into `dir`, creating it.
void write_run_stamp(const std::filesystem::path& dir, const RunConfig& c);

}  // namespace clinrel::app
