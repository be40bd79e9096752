#include "clinrel/app/config.hpp"

#include <algorithm>
#include <fstream>

#include "clinrel/error.hpp"

#ifndef CLINREL_VERSION
#define CLINREL_VERSION "0.0.0"
#endif

namespace clinrel::app {

std::string_view version() noexcept { return CLINREL_VERSION; }

namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  only_keys(j, "config", {"seed", "model", "corpus", "format", "input", "folds", "ner", "pairs", "balance", "rc"});
  RunConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("model")) c.model = j.at("model").get<std::string>();
    if (j.contains("corpus")) c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
    if (j.contains("format")) {
      auto f = parse_corpus_format(j.at("format").get<std::string>());
      if (!f) throw ConfigError("format: expected jsonl or conll");
      c.format = *f;
    }
    if (j.contains("input")) {
      const auto& in = j.at("input");
      only_keys(in, "input", {"kind", "word_vectors", "archive"});
      const auto kind = in.at("kind").get<std::string>();
      if (kind == "static") {
        c.input = InputKind::StaticVectors;
        c.word_vectors = resolve(base_dir, in.at("word_vectors").get<std::string>());
        if (in.contains("archive")) throw ConfigError("input: 'archive' is only valid with kind 'archive'");
      } else if (kind == "archive") {
        c.input = InputKind::ContextualArchive;
        c.archive = resolve(base_dir, in.at("archive").get<std::string>());
        if (in.contains("word_vectors")) throw ConfigError("input: 'word_vectors' is only valid with kind 'static'");
      } else {
        throw ConfigError("input.kind: expected static or archive");
      }
    }
    if (j.contains("folds")) {
      const auto& f = j.at("folds");
      only_keys(f, "folds", {"k", "train", "validation", "test"});
      if (f.contains("k")) c.folds = f.at("k").get<int>();
      if (f.contains("train")) c.ratios.train = f.at("train").get<double>();
      if (f.contains("validation")) c.ratios.validation = f.at("validation").get<double>();
      if (f.contains("test")) c.ratios.test = f.at("test").get<double>();
    }
    if (j.contains("pairs")) {
      only_keys(j.at("pairs"), "pairs", {"window"});
      if (j.at("pairs").contains("window")) c.window = j.at("pairs").at("window").get<std::size_t>();
    }
    if (j.contains("balance")) {
      const auto& b = j.at("balance");
      only_keys(b, "balance", {"target_ratio", "smote_k", "minority_multiplier"});
      if (b.contains("target_ratio")) c.balance.target_ratio = b.at("target_ratio").get<double>();
      if (b.contains("smote_k")) c.balance.smote_k = b.at("smote_k").get<std::size_t>();
      if (b.contains("minority_multiplier"))
        c.balance.minority_multiplier = b.at("minority_multiplier").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.ner.encoder = c.input == InputKind::StaticVectors ? EncoderKind::BiLstm : EncoderKind::Frozen;
  if (j.contains("ner")) {
    c.ner = tagger_config_from_json(j.at("ner"), c.ner);
    const auto want = c.input == InputKind::StaticVectors ? EncoderKind::BiLstm : EncoderKind::Frozen;
    if (c.ner.encoder != want) throw ConfigError("ner.encoder does not match the input kind");
  }
  if (j.contains("rc")) c.rc = rc_config_from_json(j.at("rc"), c.rc);
  c.balance.seed = c.seed;
  c.balance.validate();
  if (c.folds < 2) throw ConfigError("folds.k must be at least 2");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json input = c.input == InputKind::StaticVectors
                   ? json{{"kind", "static"}, {"word_vectors", c.word_vectors.string()}}
                   : json{{"kind", "archive"}, {"archive", c.archive.string()}};
  return {{"seed", c.seed},
          {"model", c.model},
          {"corpus", c.corpus.string()},
          {"format", c.format == CorpusFormat::Jsonl ? "jsonl" : "conll"},
          {"input", input},
          {"folds", {{"k", c.folds}, {"train", c.ratios.train}, {"validation", c.ratios.validation}, {"test", c.ratios.test}}},
          {"ner", to_json(c.ner)},
          {"pairs", {{"window", c.window}}},
          {"balance",
           {{"target_ratio", c.balance.target_ratio},
            {"smote_k", c.balance.smote_k},
            {"minority_multiplier", c.balance.minority_multiplier}}},
          {"rc", to_json(c.rc)}};
}

void write_run_stamp(const std::filesystem::path& dir, const RunConfig& c) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << to_json(c).dump(2) << '\n';
  std::ofstream(dir / "VERSION") << "clinrel " << version() << '\n';
}

}  // namespace clinrel::app
