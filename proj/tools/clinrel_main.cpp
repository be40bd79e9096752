#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "clinrel/app/commands.hpp"

namespace app = clinrel::app;

namespace {

void set_log_level() {
  const char* env = std::getenv("CLINREL_LOG");
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");
  if (!env) return;
  const auto level = spdlog::level::from_str(env);
  // from_str maps unknown names to off
  if (level == spdlog::level::off && std::string(env) != "off") {
    spdlog::warn("CLINREL_LOG: unknown level '{}', keeping info", env);
    return;
  }
  spdlog::set_level(level);
}

std::optional<clinrel::RelationLabel> parse_relation(const std::string& s) {
  if (s == "ade") return clinrel::RelationLabel::Ade;
  if (s == "indication") return clinrel::RelationLabel::Indication;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App cli{"Drug/disorder tagging and adverse drug event relation extraction"};
  cli.set_version_flag("--version", std::string(app::version()));
  cli.require_subcommand(1);

  app::Options opts;
  std::string format, seed;
  cli.add_option("--config", opts.config, "run configuration (JSON)");
  cli.add_option("--seed", seed, "global seed, overrides the config");
  cli.add_option("--out", opts.out, "output directory")->capture_default_str();
  cli.add_option("--format", format, "corpus format")->check(CLI::IsMember({"jsonl", "conll"}));
  cli.add_option("--threshold-metric", opts.threshold_metric, "f1 or f2")->check(CLI::IsMember({"f1", "f2"}));

  std::filesystem::path in, model, corpus, pairs_dir, train_dir, val_dir, scores, thresholds, predictions, models;
  std::string relation = "ade", source = "gold";
  int fold = 0;
  clinrel::app::SyntheticOptions synth;
  std::size_t dim = 300;
  bool archive = false;

  auto* convert = cli.add_subcommand("convert", "validate a corpus and write it as JSONL");
  convert->add_option("input", in)->required();
  auto* split = cli.add_subcommand("split", "write the k-fold plan");
  auto* train_ner = cli.add_subcommand("train-ner", "train the entity tagger on one fold");
  train_ner->add_option("--fold", fold)->capture_default_str();
  auto* predict_ner = cli.add_subcommand("predict-ner", "tag a corpus with a trained tagger");
  predict_ner->add_option("--model", model)->required();
  predict_ner->add_option("--corpus", corpus, "defaults to the config corpus");
  auto* gen_pairs = cli.add_subcommand("gen-pairs", "candidate pairs and their feature rows");
  gen_pairs->add_option("--model", model)->required();
  gen_pairs->add_option("--corpus", corpus, "defaults to the config corpus");
  gen_pairs->add_option("--source", source)->check(CLI::IsMember({"gold", "predicted"}))->capture_default_str();
  auto* rebalance = cli.add_subcommand("rebalance", "SMOTE plus undersampling of a gen-pairs output");
  rebalance->add_option("--pairs", pairs_dir)->required();
  rebalance->add_option("--relation", relation)->check(CLI::IsMember({"ade", "indication"}))->capture_default_str();
  auto* train_rc = cli.add_subcommand("train-rc", "train a relation classifier");
  train_rc->add_option("--train", train_dir, "rebalance output")->required();
  train_rc->add_option("--val", val_dir, "gen-pairs output")->required();
  train_rc->add_option("--relation", relation)->check(CLI::IsMember({"ade", "indication"}))->capture_default_str();
  auto* tune = cli.add_subcommand("tune-threshold", "F1- and F2-optimal thresholds from a scores CSV");
  tune->add_option("--scores", scores)->required();
  auto* evaluate = cli.add_subcommand("evaluate", "score a classifier or tagger output");
  evaluate->add_option("--scores", scores);
  evaluate->add_option("--thresholds", thresholds);
  evaluate->add_option("--predictions", predictions, "predict-ner output");
  evaluate->add_option("--gold", corpus, "gold corpus for --predictions");
  auto* cv = cli.add_subcommand("cross-validate", "full k-fold protocol");
  auto* doc_eval = cli.add_subcommand("doc-eval", "document-level ADE detection with stored fold models");
  doc_eval->add_option("--corpus", corpus)->required();
  doc_eval->add_option("--models", models, "cross-validate output directory")->required();
  auto* pr = cli.add_subcommand("pr-curve", "precision/recall points of a scores CSV");
  pr->add_option("--scores", scores)->required();
  auto* syn = cli.add_subcommand("synth", "generate a synthetic corpus with vectors or an archive");
  syn->add_option("--documents", synth.documents)->capture_default_str();
  syn->add_option("--doc-seed", synth.seed)->capture_default_str();
  syn->add_option("--prefix", synth.id_prefix)->capture_default_str();
  syn->add_option("--dim", dim)->capture_default_str();
  syn->add_flag("--archive", archive, "write a contextual archive instead of word vectors");

  for (auto* sub : cli.get_subcommands({})) sub->fallthrough();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kBadInput;
  }

  if (!seed.empty()) {
    try {
      std::size_t used = 0;
      opts.seed = std::stoull(seed, &used);
      if (used != seed.size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      spdlog::error("--seed must be an unsigned integer");
      return app::kBadInput;
    }
  }
  if (!format.empty()) opts.format = clinrel::parse_corpus_format(format);
  const auto rel = *parse_relation(relation);

  if (*convert) return app::cmd_convert(opts, in);
  if (*split) return app::cmd_split(opts);
  if (*train_ner) return app::cmd_train_ner(opts, fold);
  if (*predict_ner) return app::cmd_predict_ner(opts, model, corpus);
  if (*gen_pairs)
    return app::cmd_gen_pairs(opts, model, corpus,
                              source == "gold" ? clinrel::PairSource::GoldEntities
                                               : clinrel::PairSource::PredictedEntities);
  if (*rebalance) return app::cmd_rebalance(opts, pairs_dir, rel);
  if (*train_rc) return app::cmd_train_rc(opts, train_dir, val_dir, rel);
  if (*tune) return app::cmd_tune_threshold(opts, scores);
  if (*evaluate) {
    if (!predictions.empty()) return app::cmd_evaluate_ner(opts, predictions, corpus);
    if (scores.empty() || thresholds.empty()) {
      spdlog::error("evaluate: give --scores with --thresholds, or --predictions with --gold");
      return app::kBadInput;
    }
    return app::cmd_evaluate(opts, scores, thresholds);
  }
  if (*cv) return app::cmd_cross_validate(opts);
  if (*doc_eval) return app::cmd_doc_eval(opts, corpus, models);
  if (*pr) return app::cmd_pr_curve(opts, scores);
  if (*syn) return app::cmd_synth(opts, synth, dim, archive);
  return app::kBadInput;
}
