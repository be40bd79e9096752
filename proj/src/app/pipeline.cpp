#include "clinrel/app/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "clinrel/balance/balance.hpp"
#include "clinrel/corpus/folds.hpp"
#include "clinrel/corpus/io.hpp"
#include "clinrel/error.hpp"

namespace clinrel::app {

namespace fs = std::filesystem;
using nlohmann::json;

InputStore::InputStore(WordVectorTable table) : table_(std::make_shared<WordVectorTable>(std::move(table))) {}
InputStore::InputStore(ContextualArchive archive)
    : archive_(std::make_shared<ContextualArchive>(std::move(archive))) {}

InputStore InputStore::load(const RunConfig& config, const std::vector<Document>& corpus,
                            const fs::path& archive_override) {
  if (config.input == InputKind::StaticVectors) return InputStore(load_word_vectors_file(config.word_vectors));
  return InputStore(
      load_contextual_archive_file(archive_override.empty() ? config.archive : archive_override, corpus));
}

EncoderSource InputStore::source() const { return table_ ? EncoderSource(*table_) : EncoderSource(*archive_); }

DocumentRepresentations DocumentView::representations() const {
  return {&inputs, analysis.hidden.empty() ? nullptr : &analysis.hidden, context, &probabilities};
}

FeatureLayout layout_for(const TrainedTagger& tagger, const EncoderSource& source) {
  if (source.is_static()) {
    if (!tagger.params().encoder) throw ConfigError("static vectors need the recurrent tagger");
    return FeatureLayout::bilstm(source.dim(), tagger.feature_width(), LabelSet::core5().size());
  }
  return FeatureLayout::transformer(source.dim(), kArchiveProbabilityColumns);
}

DocumentView view_document(const Document& doc, const EncoderSource& source, const TrainedTagger& tagger) {
  DocumentView v;
  v.doc = &doc;
  v.inputs = source.token_inputs(doc);
  v.analysis = tagger.analyze(doc, v.inputs);
  if (source.is_static()) {
    v.probabilities = v.analysis.probabilities;
  } else {
    const auto& archived = source.archived_probabilities(doc);
    v.probabilities = archived ? *archived : lift_core5_probabilities(v.analysis.probabilities);
    v.context = &source.sentence_context(doc);
  }
  return v;
}

std::vector<int> PairSet::labels(RelationLabel relation) const {
  std::vector<int> out;
  for (const auto& p : pairs) out.push_back((relation == RelationLabel::Ade ? p.gold_ade : p.gold_indication) ? 1 : 0);
  return out;
}

std::vector<bool> PairSet::flags(RelationLabel relation) const {
  std::vector<bool> out;
  for (const auto& p : pairs) out.push_back(relation == RelationLabel::Ade ? p.gold_ade : p.gold_indication);
  return out;
}

namespace {

EntityAlignment alignment_for(const DocumentView& v, PairSource source, AlignMode align) {
  if (source == PairSource::GoldEntities) return identity_alignment(v.doc->entities);
  return align == AlignMode::Lenient ? align_entities(v.analysis.spans, v.doc->entities)
                                     : align_entities_exact(v.analysis.spans, v.doc->entities);
}

}  // namespace

PairSet build_pairs(std::span<const DocumentView> views, PairSource source, std::size_t window,
                    const FeatureLayout& layout, AlignMode align, bool with_features) {
  PairSet set;
  std::vector<Matrix> blocks;
  std::size_t rows = 0;
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    const auto& v = views[vi];
    const auto& entities = source == PairSource::GoldEntities ? v.doc->entities : v.analysis.spans;
    auto cands = generate_candidates(*v.doc, entities, window, source);
    derive_pair_labels(cands, *v.doc, alignment_for(v, source, align));
    if (with_features) {
      blocks.push_back(assemble_feature_matrix(*v.doc, cands, v.representations(), layout));
      rows += cands.size();
    }
    for (auto& c : cands) {
      set.pairs.push_back(std::move(c));
      set.view_index.push_back(vi);
    }
  }
  if (with_features) {
    set.features = Matrix(rows, layout.size());
    std::size_t r = 0;
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < b.rows(); ++i) std::ranges::copy(b.row(i), set.features.row(r++).begin());
  }
  return set;
}

PairSet relabel(const PairSet& set, std::span<const DocumentView> views, AlignMode align) {
  PairSet out = set;
  std::map<std::size_t, EntityAlignment> cache;
  for (std::size_t i = 0; i < out.pairs.size(); ++i) {
    const std::size_t vi = out.view_index[i];
    auto it = cache.find(vi);
    if (it == cache.end()) it = cache.emplace(vi, alignment_for(views[vi], out.pairs[i].source, align)).first;
    derive_pair_labels(std::span(&out.pairs[i], 1), *views[vi].doc, it->second);
  }
  return out;
}

json to_json(const ThresholdTable& t) {
  json j = json::object();
  for (const auto& [setting, rels] : t)
    for (const auto& [rel, th] : rels) j[setting][rel] = {{"f1", th.f1}, {"f2", th.f2}};
  return j;
}

ThresholdTable threshold_table_from_json(const json& j) {
  ThresholdTable t;
  try {
    for (const auto& [setting, rels] : j.items())
      for (const auto& [rel, th] : rels.items()) t[setting][rel] = {th.at("f1").get<double>(), th.at("f2").get<double>()};
  } catch (const json::exception& e) {
    throw ArtifactMismatchError(std::string("unreadable thresholds: ") + e.what());
  }
  return t;
}

namespace {

constexpr std::array kRelations{std::pair{RelationLabel::Ade, "ade"}, std::pair{RelationLabel::Indication, "indication"}};

template <class F>
auto stage(const char* name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      spdlog::debug("{} done in {:.1f}s", name,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else {
      auto r = f();
      spdlog::debug("{} done in {:.1f}s", name,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

class Values {
 public:
  void set(std::string task, std::string mode, std::string metric, double v) {
    values_.emplace_back(MetricKey{std::move(task), std::move(mode), std::move(metric)}, v);
  }

  void add_prf(const std::string& task, const std::string& mode, const std::string& prefix, const Prf& p) {
    set(task, mode, prefix + "precision", p.precision);
    set(task, mode, prefix + "recall", p.recall);
    set(task, mode, prefix + "f1", p.f);
  }

  void add_binary(const std::string& task, const std::string& mode, const std::vector<bool>& pred,
                  const std::vector<bool>& gold) {
    const auto counts = binary_class_counts(pred, gold);
    const auto a1 = aggregate(counts, 1.0);
    const auto a2 = aggregate(counts, 2.0);
    set(task, mode, "micro_precision", a1.micro.precision);
    set(task, mode, "micro_recall", a1.micro.recall);
    set(task, mode, "micro_f1", a1.micro.f);
    set(task, mode, "micro_f2", a2.micro.f);
    set(task, mode, "macro_precision", a1.macro.precision);
    set(task, mode, "macro_recall", a1.macro.recall);
    set(task, mode, "macro_f1", a1.macro.f);
    set(task, mode, "macro_f2", a2.macro.f);
  }

  std::vector<std::pair<MetricKey, double>> take() { return std::move(values_); }
  const std::vector<std::pair<MetricKey, double>>& all() const { return values_; }

 private:
  std::vector<std::pair<MetricKey, double>> values_;
};

Thresholds tune(const std::vector<double>& scores, const std::vector<bool>& labels, const char* what) {
  try {
    return {select_threshold(scores, labels, 1.0).threshold, select_threshold(scores, labels, 2.0).threshold};
  } catch (const DegenerateCurveError&) {
    spdlog::warn("{}: validation split has no positives, falling back to threshold 0.5", what);
    return {};
  }
}

void write_scores(const fs::path& path, const PairSet& set, const std::vector<double>& scores, RelationLabel rel) {
  std::ofstream out(path);
  write_scores_csv(out, set.pairs, scores, rel);
}

void write_curve(const fs::path& path, const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (std::ranges::find(labels, true) == labels.end()) return;
  std::ofstream out(path);
  write_pr_curve_csv(out, pr_curve(scores, labels));
}

std::vector<bool> at_threshold(const std::vector<double>& scores, double t) {
  std::vector<bool> out;
  for (double s : scores) out.push_back(s >= t);
  return out;
}

// Items of the end-to-end evaluation: every predicted pair, plus one missed
// item for each in-window gold relation no predicted pair reaches.
void end_to_end_items(const PairSet& set, std::span<const DocumentView> views, AlignMode align, RelationLabel rel,
                      std::size_t window, const std::vector<bool>& predicted, std::vector<bool>& pred_out,
                      std::vector<bool>& gold_out) {
  pred_out = predicted;
  gold_out = set.flags(rel);
  std::set<std::pair<std::size_t, PairKey>> reached;
  std::map<std::size_t, EntityAlignment> aligned;
  for (std::size_t vi = 0; vi < views.size(); ++vi)
    aligned[vi] = alignment_for(views[vi], PairSource::PredictedEntities, align);
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const auto& al = aligned[set.view_index[i]];
    const auto d = al.find(set.pairs[i].drug.id);
    const auto s = al.find(set.pairs[i].disorder.id);
    if (d != al.end() && s != al.end()) reached.insert({set.view_index[i], {d->second, s->second}});
  }
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    const Document& doc = *views[vi].doc;
    for (const auto& r : doc.relations) {
      if (r.label != rel) continue;
      const auto* d = doc.find_entity(r.drug_id);
      const auto* s = doc.find_entity(r.disorder_id);
      const std::size_t sd = doc.sentence_of(*d), ss = doc.sentence_of(*s);
      if ((sd > ss ? sd - ss : ss - sd) > window) continue;
      if (reached.contains({vi, {r.drug_id, r.disorder_id}})) continue;
      pred_out.push_back(false);
      gold_out.push_back(true);
    }
  }
}

GroupTally group_tally(const PairSet& set, std::span<const DocumentView> views, const std::vector<bool>& predicted,
                       GroupMode mode) {
  std::vector<std::set<PairKey>> per_view(views.size());
  std::map<std::size_t, EntityAlignment> aligned;
  for (std::size_t vi = 0; vi < views.size(); ++vi)
    aligned[vi] = alignment_for(views[vi], PairSource::PredictedEntities, AlignMode::Lenient);
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    if (!predicted[i]) continue;
    const auto& al = aligned[set.view_index[i]];
    const auto d = al.find(set.pairs[i].drug.id);
    const auto s = al.find(set.pairs[i].disorder.id);
    if (d != al.end() && s != al.end()) per_view[set.view_index[i]].insert({d->second, s->second});
  }
  GroupTally t;
  for (std::size_t vi = 0; vi < views.size(); ++vi) t += count_groups(per_view[vi], *views[vi].doc, mode);
  return t;
}

json tagger_history_json(const TaggerHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_f1", e.val_f1}, {"lr", e.learning_rate}});
  return {{"best_epoch", h.best_epoch}, {"epochs", epochs}};
}

}  // namespace

FoldResult run_fold(const RunConfig& config, const std::vector<Document>& corpus, const EncoderSource& source,
                    const FoldPlan& plan, int fold, const fs::path& dir) {
  write_run_stamp(dir, config);
  const std::uint64_t fold_seed = config.seed + 7919ull * static_cast<std::uint64_t>(fold + 1);
  auto docs_of = [&](Role r) {
    std::vector<const Document*> out;
    for (std::size_t i : plan.indices(fold, r)) out.push_back(&corpus.at(i));
    return out;
  };
  const auto train_docs = docs_of(Role::Train);
  const auto val_docs = docs_of(Role::Validation);
  const auto test_docs = docs_of(Role::Test);

  const TrainedTagger tagger = stage("train-ner", [&] {
    auto examples = [&](const std::vector<const Document*>& docs) {
      std::vector<TaggerExample> ex;
      for (const auto* d : docs) ex.push_back({d, source.token_inputs(*d)});
      return ex;
    };
    const auto tr = examples(train_docs);
    const auto va = examples(val_docs);
    auto t = train_tagger(tr, va, config.ner, fold_seed);
    t.save_file(dir / "tagger.tag");
    std::ofstream(dir / "tagger_history.json") << tagger_history_json(t.history()).dump(2) << '\n';
    return t;
  });
  spdlog::info("fold {}: tagger best epoch {} (val strict F1 {:.4f})", fold, tagger.history().best_epoch,
               tagger.history().epochs.at(static_cast<std::size_t>(tagger.history().best_epoch - 1)).val_f1);

  auto views_of = [&](const std::vector<const Document*>& docs) {
    std::vector<DocumentView> v;
    for (const auto* d : docs) v.push_back(view_document(*d, source, tagger));
    return v;
  };
  const auto [train_views, val_views, test_views] = stage("predict-ner", [&] {
    return std::tuple{views_of(train_docs), views_of(val_docs), views_of(test_docs)};
  });

  Values values;
  for (auto mode : {MatchMode::Strict, MatchMode::Lenient}) {
    Counts drug, disorder;
    for (const auto& v : test_views) {
      const auto c = match_spans(v.analysis.spans, v.doc->entities, mode);
      drug += c.at(EntityKind::Drug);
      disorder += c.at(EntityKind::Disorder);
    }
    const std::array per_kind{drug, disorder};
    const auto avg = aggregate(per_kind, 1.0);
    const std::string m(to_string(mode));
    values.add_prf("task1", m, "micro_", avg.micro);
    values.add_prf("task1", m, "macro_", avg.macro);
    values.add_prf("task1", m, "drug_", prf(drug));
    values.add_prf("task1", m, "disorder_", prf(disorder));
  }

  const FeatureLayout layout = layout_for(tagger, source);
  const auto sets = stage("gen-pairs", [&] {
    std::map<std::string, PairSet> s;
    s["train_gold"] = build_pairs(train_views, PairSource::GoldEntities, config.window, layout);
    s["val_gold"] = build_pairs(val_views, PairSource::GoldEntities, config.window, layout);
    s["test_gold"] = build_pairs(test_views, PairSource::GoldEntities, config.window, layout);
    s["val_pred"] = build_pairs(val_views, PairSource::PredictedEntities, config.window, layout);
    s["test_pred"] = build_pairs(test_views, PairSource::PredictedEntities, config.window, layout);
    s["test_pred_strict"] = relabel(s.at("test_pred"), test_views, AlignMode::Strict);
    std::ofstream out(dir / "pairs_test_predicted.jsonl");
    write_pairs_jsonl(out, s.at("test_pred").pairs);
    return s;
  });

  FoldResult result;
  std::map<RelationLabel, Values> per_relation_task2, per_relation_task3;
  std::vector<std::pair<MetricKey, double>> group_values;
  for (const auto& [rel, name] : kRelations) {
    const std::string rel_name(name);
    const auto balanced = stage("rebalance", [&] {
      auto cfg = config.balance;
      cfg.seed = fold_seed + 17;
      return rebalance(sets.at("train_gold").features, sets.at("train_gold").labels(rel), cfg);
    });
    const auto rc = stage("train-rc", [&] {
      auto m = train_rc(balanced.features, balanced.labels, sets.at("val_gold").features,
                        sets.at("val_gold").labels(rel), config.rc, fold_seed + 31);
      m.save_file(dir / ("rc_" + rel_name + ".rcm"), layout);
      return m;
    });
    spdlog::info("fold {}: {} classifier best epoch {} of {}", fold, rel_name, rc.best_epoch, rc.history.size());

    const auto val_gold_scores = score_pairs(rc.params, sets.at("val_gold").features);
    const auto val_pred_scores = score_pairs(rc.params, sets.at("val_pred").features);
    const auto test_gold_scores = score_pairs(rc.params, sets.at("test_gold").features);
    const auto test_pred_scores = score_pairs(rc.params, sets.at("test_pred").features);

    stage("tune-threshold", [&] {
      const auto vg = sets.at("val_gold").flags(rel);
      const auto vp = sets.at("val_pred").flags(rel);
      result.thresholds["two_step"][rel_name] = tune(val_gold_scores, vg, "two-step");
      result.thresholds["end_to_end"][rel_name] = tune(val_pred_scores, vp, "end-to-end");
      write_scores(dir / ("val_scores_" + rel_name + "_two_step.csv"), sets.at("val_gold"), val_gold_scores, rel);
      write_scores(dir / ("val_scores_" + rel_name + "_end_to_end.csv"), sets.at("val_pred"), val_pred_scores, rel);
      write_curve(dir / ("pr_curve_" + rel_name + "_two_step.csv"), val_gold_scores, vg);
      write_curve(dir / ("pr_curve_" + rel_name + "_end_to_end.csv"), val_pred_scores, vp);
    });

    stage("evaluate", [&] {
      write_scores(dir / ("test_scores_" + rel_name + "_end_to_end.csv"), sets.at("test_pred"), test_pred_scores, rel);
      const auto& ts = result.thresholds["two_step"][rel_name];
      const auto& te = result.thresholds["end_to_end"][rel_name];
      for (const auto& [tname, t] : {std::pair{"f1", ts.f1}, std::pair{"f2", ts.f2}})
        per_relation_task2[rel].add_binary("task2_" + rel_name, std::string("strict@") + tname,
                                           at_threshold(test_gold_scores, t), sets.at("test_gold").flags(rel));
      for (const auto& [aname, set_name, align] :
           {std::tuple{"strict", "test_pred_strict", AlignMode::Strict},
            std::tuple{"lenient", "test_pred", AlignMode::Lenient}}) {
        for (const auto& [tname, t] : {std::pair{"f1", te.f1}, std::pair{"f2", te.f2}}) {
          std::vector<bool> pred, gold;
          end_to_end_items(sets.at(set_name), test_views, align, rel, config.window,
                           at_threshold(test_pred_scores, t), pred, gold);
          per_relation_task3[rel].add_binary("task3_" + rel_name, std::string(aname) + "@" + tname, pred, gold);
        }
      }
      if (rel != RelationLabel::Ade) return;
      for (auto gmode : {GroupMode::Easy, GroupMode::Hard})
        for (const auto& [tname, t] : {std::pair{"f1", te.f1}, std::pair{"f2", te.f2}}) {
          const auto tally = group_tally(sets.at("test_pred"), test_views, at_threshold(test_pred_scores, t), gmode);
          if (tally.total == 0) throw UndefinedMetricError("test split has no ADE groups");
          group_values.emplace_back(
              MetricKey{"ade_groups", std::string(to_string(gmode)) + "@" + tname, "detected_fraction"},
              static_cast<double>(tally.detected) / static_cast<double>(tally.total));
        }
    });
  }

  result.values = values.take();
  for (auto* group : {&per_relation_task2, &per_relation_task3})
    for (auto& [rel, v] : *group)
      for (auto& kv : v.take()) result.values.push_back(std::move(kv));
  for (auto& kv : group_values) result.values.push_back(std::move(kv));

  json metrics = json::array();
  for (const auto& [k, v] : result.values) metrics.push_back({{"task", k.task}, {"mode", k.mode}, {"metric", k.metric}, {"value", v}});
  std::ofstream(dir / "metrics.json") << metrics.dump(2) << '\n';
  std::ofstream(dir / "thresholds.json") << to_json(result.thresholds).dump(2) << '\n';
  return result;
}

std::vector<ReportRow> summarize(const std::string& model, std::span<const FoldResult> folds) {
  std::vector<ReportRow> rows;
  if (folds.empty()) return rows;
  for (std::size_t i = 0; i < folds.front().values.size(); ++i) {
    const MetricKey& key = folds.front().values[i].first;
    std::vector<double> xs;
    for (const auto& f : folds) {
      auto it = std::ranges::find(f.values, key, &std::pair<MetricKey, double>::first);
      if (it == f.values.end()) throw Error("fold results disagree on metric " + key.task + "/" + key.mode + "/" + key.metric);
      xs.push_back(it->second);
    }
    const Summary s = xs.size() >= 2 ? cv_summary(xs) : Summary{xs.front(), 0.0};
    rows.push_back({model, key.task, key.mode, key.metric, s.mean, s.std});
  }
  return rows;
}

CrossValidationResult cross_validate(const RunConfig& config, const fs::path& out) {
  const auto corpus = stage("load-corpus", [&] { return read_corpus_file(config.corpus, config.format); });
  const auto store = stage("load-inputs", [&] { return InputStore::load(config, corpus); });
  const auto source = store.source();
  write_run_stamp(out, config);

  std::vector<std::string> ids;
  for (const auto& d : corpus) ids.push_back(d.id);
  const auto plan = stage("split", [&] { return split_folds(ids, config.folds, config.ratios, config.seed); });
  std::ofstream(out / "folds.json") << to_json(plan).dump(2) << '\n';

  CrossValidationResult res;
  json thresholds = json::array();
  for (int f = 0; f < config.folds; ++f) {
    spdlog::info("fold {}/{}", f + 1, config.folds);
    res.folds.push_back(run_fold(config, corpus, source, plan, f, out / ("fold_" + std::to_string(f))));
    thresholds.push_back({{"fold", f}, {"thresholds", to_json(res.folds.back().thresholds)}});
  }
  std::ofstream(out / "thresholds.json") << thresholds.dump(2) << '\n';
  res.report = summarize(config.model, res.folds);
  std::ofstream report(out / "report.csv");
  write_report_csv(report, res.report);
  return res;
}

DocEvalResult document_evaluation(const RunConfig& config, const std::vector<Document>& corpus,
                                  const EncoderSource& source, const fs::path& model_dir, const fs::path& out) {
  std::vector<fs::path> fold_dirs;
  for (int f = 0;; ++f) {
    const auto d = model_dir / ("fold_" + std::to_string(f));
    if (!fs::is_directory(d)) break;
    fold_dirs.push_back(d);
  }
  if (fold_dirs.empty()) throw ArtifactMismatchError("no fold_<i> model directories under " + model_dir.string());
  write_run_stamp(out, config);

  DocEvalResult res;
  std::ofstream per_fold(out / "doc_eval_folds.csv");
  per_fold << "fold,threshold_metric,threshold,precision,recall,f1,specificity\n";
  for (std::size_t f = 0; f < fold_dirs.size(); ++f) {
    const auto& dir = fold_dirs[f];
    if (!fs::exists(dir / "thresholds.json"))
      throw ArtifactMismatchError("missing thresholds in " + dir.string());
    json tj;
    try {
      tj = json::parse(std::ifstream(dir / "thresholds.json"));
    } catch (const json::exception& e) {
      throw ArtifactMismatchError("unreadable thresholds in " + dir.string() + ": " + e.what());
    }
    const auto table = threshold_table_from_json(tj);
    if (!table.contains("end_to_end") || !table.at("end_to_end").contains("ade"))
      throw ArtifactMismatchError("missing end-to-end ADE thresholds in " + dir.string());
    const Thresholds th = table.at("end_to_end").at("ade");

    for (const char* f : {"tagger.tag", "rc_ade.rcm"})
      if (!fs::exists(dir / f)) throw ArtifactMismatchError("missing " + (dir / f).string());
    const auto tagger = TrainedTagger::load_file(dir / "tagger.tag");
    const auto rc = load_rc_file(dir / "rc_ade.rcm");
    if (tagger.input_dim() != source.dim())
      throw ArtifactMismatchError("tagger expects " + std::to_string(tagger.input_dim()) +
                                  "-d inputs, the input source has " + std::to_string(source.dim()));
    const auto layout = layout_for(tagger, source);
    if (layout.prob_dim() != rc.layout.prob_dim())
      throw ArtifactMismatchError("label set mismatch: classifier was trained on " +
                                  std::to_string(rc.layout.prob_dim()) + " label probabilities, inputs give " +
                                  std::to_string(layout.prob_dim()));
    if (!(layout == rc.layout)) throw ArtifactMismatchError("feature layout of " + dir.string() + " does not match the inputs");

    std::vector<bool> gold, pred_f1, pred_f2;
    for (const auto& doc : corpus) {
      const auto view = view_document(doc, source, tagger);
      const auto cands = generate_candidates(doc, view.analysis.spans, config.window, PairSource::PredictedEntities);
      const auto scores = score_pairs(rc.model.params, assemble_feature_matrix(doc, cands, view.representations(), layout));
      gold.push_back(doc.ade_truth());
      pred_f1.push_back(predict_document(scores, th.f1).label);
      pred_f2.push_back(predict_document(scores, th.f2).label);
    }
    std::map<std::string, DocumentScores> scores{{"f1", evaluate_documents(pred_f1, gold)},
                                                 {"f2", evaluate_documents(pred_f2, gold)}};
    for (const auto& [name, s] : scores)
      per_fold << f << ',' << name << ',' << (name == "f1" ? th.f1 : th.f2) << ',' << s.precision << ','
               << s.recall << ',' << s.f1 << ',' << s.specificity << '\n';
    res.folds.push_back(std::move(scores));
  }

  for (const char* t : {"f1", "f2"}) {
    for (const auto& [metric, get] :
         {std::pair{"precision", &DocumentScores::precision}, std::pair{"recall", &DocumentScores::recall},
          std::pair{"f1", &DocumentScores::f1}, std::pair{"specificity", &DocumentScores::specificity}}) {
      std::vector<double> xs;
      for (const auto& f : res.folds) xs.push_back(f.at(t).*get);
      const Summary s = xs.size() >= 2 ? cv_summary(xs) : Summary{xs.front(), 0.0};
      res.report.push_back({config.model, "task4_documents", t, metric, s.mean, s.std});
    }
  }
  std::ofstream report(out / "doc_eval.csv");
  write_report_csv(report, res.report);
  return res;
}

}  // namespace clinrel::app
