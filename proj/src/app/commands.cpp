#include "clinrel/app/commands.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "clinrel/app/pipeline.hpp"
#include "clinrel/balance/balance.hpp"
#include "clinrel/corpus/folds.hpp"
#include "clinrel/corpus/io.hpp"
#include "clinrel/error.hpp"
#include "clinrel/metrics/metrics.hpp"

namespace clinrel::app {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig resolve_config(const Options& opts) {
  RunConfig c = opts.config.empty() ? RunConfig{} : load_run_config(opts.config);
  if (opts.seed) {
    c.seed = *opts.seed;
    c.balance.seed = *opts.seed;
  }
  if (opts.format) c.format = *opts.format;
  return c;
}

int guarded(const char* command, const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const ArtifactMismatchError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kMismatch;
  } catch (const IntegrityError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kIntegrity;
  } catch (const ParseError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kBadInput;
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kBadInput;
  } catch (const StageError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}: stage '{}' failed: {}", command, command, e.what());
    return kFailure;
  }
}

namespace {

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("no ") + what + " given");
  if (!fs::exists(p)) throw ParseError("cannot open '" + p.string() + "'");
}

std::vector<Document> corpus_for(const RunConfig& c, const fs::path& override_path = {}) {
  const fs::path p = override_path.empty() ? c.corpus : override_path;
  require_file(p, "corpus");
  return read_corpus_file(p, c.format);
}

struct ScoredItems {
  std::vector<double> scores;
  std::vector<bool> labels;
};

ScoredItems read_scores_csv(const fs::path& path) {
  require_file(path, "scores file");
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError();
  if (line != "doc,pair,score,label") throw ParseError("expected header doc,pair,score,label", 1);
  ScoredItems items;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 4) throw ParseError("expected 4 columns", n);
    try {
      std::size_t used = 0;
      items.scores.push_back(std::stod(cells[2], &used));
      if (used != cells[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("bad score '" + cells[2] + "'", n);
    }
    if (cells[3] != "0" && cells[3] != "1") throw ParseError("label must be 0 or 1", n);
    items.labels.push_back(cells[3] == "1");
  }
  if (items.scores.empty()) throw EmptyInputError();
  return items;
}

json read_json(const fs::path& path) {
  require_file(path, "JSON file");
  try {
    return json::parse(std::ifstream(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

FeatureLayout read_layout(const fs::path& dir) {
  try {
    return feature_layout_from_json(read_json(dir / "layout.json"));
  } catch (const json::exception& e) {
    throw ParseError((dir / "layout.json").string() + ": " + e.what());
  }
}

std::vector<int> relation_labels(std::span<const CandidatePair> pairs, RelationLabel relation) {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back((relation == RelationLabel::Ade ? p.gold_ade : p.gold_indication) ? 1 : 0);
  return out;
}

std::vector<CandidatePair> read_pairs(const fs::path& dir) {
  require_file(dir / "pairs.jsonl", "pairs");
  std::ifstream in(dir / "pairs.jsonl");
  return read_pairs_jsonl(in);
}

double pick_threshold(const Options& opts, const json& t) {
  if (opts.threshold_metric != "f1" && opts.threshold_metric != "f2")
    throw ConfigError("--threshold-metric must be f1 or f2");
  if (!t.contains(opts.threshold_metric)) throw ArtifactMismatchError("no " + opts.threshold_metric + " threshold stored");
  return t.at(opts.threshold_metric).get<double>();
}

void write_binary_metrics(const fs::path& path, const std::vector<bool>& pred, const std::vector<bool>& gold) {
  const auto counts = binary_class_counts(pred, gold);
  json j;
  for (double beta : {1.0, 2.0}) {
    const auto a = aggregate(counts, beta);
    const std::string f = beta == 1.0 ? "f1" : "f2";
    j["micro"]["precision"] = a.micro.precision;
    j["micro"]["recall"] = a.micro.recall;
    j["micro"][f] = a.micro.f;
    j["macro"]["precision"] = a.macro.precision;
    j["macro"]["recall"] = a.macro.recall;
    j["macro"][f] = a.macro.f;
  }
  const auto& pos = counts[0];
  j["positive_counts"] = {{"tp", pos.tp}, {"fp", pos.fp}, {"fn", pos.fn}, {"tn", pos.tn}};
  std::ofstream(path) << j.dump(2) << '\n';
  spdlog::info("macro F1 {:.4f}, positive-class P/R {:.4f}/{:.4f}", j["macro"]["f1"].get<double>(),
               prf(pos).precision, prf(pos).recall);
}

/// Tagger features for gen-pairs and friends need the run's input source.
struct LoadedInputs {
  std::vector<Document> corpus;
  InputStore store;
};

LoadedInputs load_inputs(const RunConfig& c, const fs::path& corpus_override = {}) {
  auto corpus = corpus_for(c, corpus_override);
  auto store = InputStore::load(c, corpus);
  return {std::move(corpus), std::move(store)};
}

}  // namespace

int cmd_convert(const Options& opts, const fs::path& in) {
  return guarded("convert", [&] {
    const auto c = resolve_config(opts);
    require_file(in, "input");
    const auto docs = read_corpus_file(in, c.format);
    write_run_stamp(opts.out, c);
    write_corpus_file(opts.out / "corpus.jsonl", docs);
    spdlog::info("converted {} documents", docs.size());
  });
}

int cmd_split(const Options& opts) {
  return guarded("split", [&] {
    const auto c = resolve_config(opts);
    const auto docs = corpus_for(c);
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.id);
    const auto plan = split_folds(ids, c.folds, c.ratios, c.seed);
    write_run_stamp(opts.out, c);
    std::ofstream(opts.out / "folds.json") << to_json(plan).dump(2) << '\n';
  });
}

int cmd_train_ner(const Options& opts, int fold) {
  return guarded("train-ner", [&] {
    const auto c = resolve_config(opts);
    const auto [corpus, store] = load_inputs(c);
    const auto source = store.source();
    std::vector<std::string> ids;
    for (const auto& d : corpus) ids.push_back(d.id);
    const auto plan = split_folds(ids, c.folds, c.ratios, c.seed);
    if (fold < 0 || fold >= c.folds) throw ConfigError("--fold out of range");
    auto examples = [&](Role r) {
      std::vector<TaggerExample> ex;
      for (std::size_t i : plan.indices(fold, r)) ex.push_back({&corpus[i], source.token_inputs(corpus[i])});
      return ex;
    };
    const auto tagger = train_tagger(examples(Role::Train), examples(Role::Validation), c.ner, c.seed);
    write_run_stamp(opts.out, c);
    tagger.save_file(opts.out / "tagger.tag");
    spdlog::info("best epoch {}", tagger.history().best_epoch);
  });
}

int cmd_predict_ner(const Options& opts, const fs::path& model, const fs::path& corpus_path) {
  return guarded("predict-ner", [&] {
    const auto c = resolve_config(opts);
    require_file(model, "model");
    const auto tagger = TrainedTagger::load_file(model);
    const auto [corpus, store] = load_inputs(c, corpus_path);
    const auto source = store.source();
    if (tagger.input_dim() != source.dim()) throw ArtifactMismatchError("tagger input width differs from the inputs");
    write_run_stamp(opts.out, c);
    std::ofstream out(opts.out / "predictions.jsonl");
    for (const auto& doc : corpus) {
      Document p = doc;
      p.entities = view_document(doc, source, tagger).analysis.spans;
      p.relations.clear();
      p.groups.clear();
      write_jsonl(out, p);
    }
  });
}

int cmd_gen_pairs(const Options& opts, const fs::path& model, const fs::path& corpus_path, PairSource pair_source) {
  return guarded("gen-pairs", [&] {
    const auto c = resolve_config(opts);
    require_file(model, "model");
    const auto tagger = TrainedTagger::load_file(model);
    const auto [corpus, store] = load_inputs(c, corpus_path);
    const auto source = store.source();
    if (tagger.input_dim() != source.dim()) throw ArtifactMismatchError("tagger input width differs from the inputs");
    std::vector<DocumentView> views;
    for (const auto& d : corpus) views.push_back(view_document(d, source, tagger));
    const auto layout = layout_for(tagger, source);
    const auto set = build_pairs(views, pair_source, c.window, layout);
    write_run_stamp(opts.out, c);
    std::ofstream pairs(opts.out / "pairs.jsonl");
    write_pairs_jsonl(pairs, set.pairs);
    write_feature_matrix_file(opts.out / "features.fvs", set.features);
    std::ofstream(opts.out / "layout.json") << to_json(layout).dump(2) << '\n';
    spdlog::info("{} candidate pairs, {} features each", set.pairs.size(), layout.size());
  });
}

int cmd_rebalance(const Options& opts, const fs::path& pairs_dir, RelationLabel relation) {
  return guarded("rebalance", [&] {
    const auto c = resolve_config(opts);
    const auto pairs = read_pairs(pairs_dir);
    const auto features = read_feature_matrix_file(pairs_dir / "features.fvs");
    if (features.rows() != pairs.size()) throw ArtifactMismatchError("pairs and feature rows differ in count");
    const auto layout = read_layout(pairs_dir);
    const auto set = rebalance(features, relation_labels(pairs, relation), c.balance);
    write_run_stamp(opts.out, c);
    write_feature_matrix_file(opts.out / "features.fvs", set.features);
    std::ofstream(opts.out / "labels.json") << json(set.labels).dump() << '\n';
    std::ofstream(opts.out / "layout.json") << to_json(layout).dump(2) << '\n';
  });
}

int cmd_train_rc(const Options& opts, const fs::path& train_dir, const fs::path& val_dir, RelationLabel relation) {
  return guarded("train-rc", [&] {
    const auto c = resolve_config(opts);
    const auto train_x = read_feature_matrix_file(train_dir / "features.fvs");
    const auto train_y = read_json(train_dir / "labels.json").get<std::vector<int>>();
    const auto layout = read_layout(train_dir);
    if (!(read_layout(val_dir) == layout)) throw ArtifactMismatchError("train and validation layouts differ");
    const auto val_pairs = read_pairs(val_dir);
    const auto val_x = read_feature_matrix_file(val_dir / "features.fvs");
    const auto rc = train_rc(train_x, train_y, val_x, relation_labels(val_pairs, relation), c.rc, c.seed);
    write_run_stamp(opts.out, c);
    rc.save_file(opts.out / "rc.rcm", layout);
    std::ofstream scores(opts.out / "val_scores.csv");
    write_scores_csv(scores, val_pairs, score_pairs(rc.params, val_x), relation);
    spdlog::info("best epoch {} of {}", rc.best_epoch, rc.history.size());
  });
}

int cmd_tune_threshold(const Options& opts, const fs::path& scores) {
  return guarded("tune-threshold", [&] {
    const auto c = resolve_config(opts);
    const auto items = read_scores_csv(scores);
    const auto t1 = select_threshold(items.scores, items.labels, 1.0);
    const auto t2 = select_threshold(items.scores, items.labels, 2.0);
    write_run_stamp(opts.out, c);
    std::ofstream(opts.out / "thresholds.json")
        << json{{"f1", t1.threshold}, {"f2", t2.threshold}, {"best_f1", t1.f}, {"best_f2", t2.f}}.dump(2) << '\n';
    spdlog::info("F1 threshold {:.6f} (F1 {:.4f}), F2 threshold {:.6f} (F2 {:.4f})", t1.threshold, t1.f,
                 t2.threshold, t2.f);
  });
}

int cmd_evaluate(const Options& opts, const fs::path& scores, const fs::path& thresholds) {
  return guarded("evaluate", [&] {
    const auto c = resolve_config(opts);
    const auto items = read_scores_csv(scores);
    const double t = pick_threshold(opts, read_json(thresholds));
    std::vector<bool> pred;
    for (double s : items.scores) pred.push_back(s >= t);
    write_run_stamp(opts.out, c);
    write_binary_metrics(opts.out / "metrics.json", pred, items.labels);
  });
}

int cmd_evaluate_ner(const Options& opts, const fs::path& predicted, const fs::path& gold) {
  return guarded("evaluate", [&] {
    const auto c = resolve_config(opts);
    require_file(predicted, "predictions");
    require_file(gold, "gold corpus");
    const auto pred = read_corpus_file(predicted, CorpusFormat::Jsonl);
    const auto ref = read_corpus_file(gold, c.format);
    std::map<std::string, const Document*, std::less<>> by_id;
    for (const auto& d : pred) by_id[d.id] = &d;
    json j;
    for (auto mode : {MatchMode::Strict, MatchMode::Lenient}) {
      Counts drug, disorder;
      for (const auto& g : ref) {
        const auto it = by_id.find(g.id);
        if (it == by_id.end()) throw IntegrityError("no prediction for document " + g.id);
        const auto k = match_spans(it->second->entities, g.entities, mode);
        drug += k.at(EntityKind::Drug);
        disorder += k.at(EntityKind::Disorder);
      }
      const std::array both{drug, disorder};
      const auto a = aggregate(both);
      auto put = [&](const char* name, const Prf& p) {
        j[std::string(to_string(mode))][name] = {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f}};
      };
      put("micro", a.micro);
      put("macro", a.macro);
      put("drug", prf(drug));
      put("disorder", prf(disorder));
    }
    write_run_stamp(opts.out, c);
    std::ofstream(opts.out / "metrics.json") << j.dump(2) << '\n';
    spdlog::info("strict micro F1 {:.4f}", j["strict"]["micro"]["f1"].get<double>());
  });
}

int cmd_cross_validate(const Options& opts) {
  return guarded("cross-validate", [&] {
    const auto c = resolve_config(opts);
    require_file(c.corpus, "corpus");
    const auto res = cross_validate(c, opts.out);
    for (const auto& r : res.report)
      if (r.metric == "micro_f1" && (r.task == "task1" || r.mode.ends_with("@f1")))
        spdlog::info("{} {} micro F1 {:.4f} +/- {:.4f}", r.task, r.mode, r.mean, r.std);
  });
}

int cmd_doc_eval(const Options& opts, const fs::path& corpus_path, const fs::path& model_dir) {
  return guarded("doc-eval", [&] {
    const auto c = resolve_config(opts);
    const auto [corpus, store] = load_inputs(c, corpus_path);
    const auto res = document_evaluation(c, corpus, store.source(), model_dir, opts.out);
    for (const auto& r : res.report)
      spdlog::info("{} threshold: {} {:.4f} +/- {:.4f}", r.mode, r.metric, r.mean, r.std);
  });
}

int cmd_pr_curve(const Options& opts, const fs::path& scores) {
  return guarded("pr-curve", [&] {
    const auto c = resolve_config(opts);
    const auto items = read_scores_csv(scores);
    const auto curve = pr_curve(items.scores, items.labels);
    write_run_stamp(opts.out, c);
    std::ofstream out(opts.out / "pr_curve.csv");
    write_pr_curve_csv(out, curve);
  });
}

int cmd_synth(const Options& opts, const SyntheticOptions& synth, std::size_t dim, bool archive) {
  return guarded("synth", [&] {
    RunConfig c = resolve_config(opts);
    const auto docs = generate_synthetic_corpus(synth);
    fs::create_directories(opts.out);
    const fs::path root = fs::absolute(opts.out);
    write_corpus_file(root / "corpus.jsonl", docs);
    c.corpus = root / "corpus.jsonl";
    c.format = CorpusFormat::Jsonl;
    if (archive) {
      synthetic_archive(docs, dim, c.seed).write_file(root / "archive.cea");
      c.input = InputKind::ContextualArchive;
      c.archive = root / "archive.cea";
      c.ner.encoder = EncoderKind::Frozen;
    } else {
      std::ofstream vec(root / "vectors.txt");
      synthetic_word_vectors(dim, c.seed).write(vec);
      c.input = InputKind::StaticVectors;
      c.word_vectors = root / "vectors.txt";
      c.ner.encoder = EncoderKind::BiLstm;
    }
    write_run_stamp(opts.out, c);
    spdlog::info("wrote {} synthetic documents", docs.size());
  });
}

}  // namespace clinrel::app
