// Standalone acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (no arguments runs all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>
#include <unistd.h>

#include "clinrel/app/pipeline.hpp"
#include "clinrel/app/synthetic.hpp"
#include "clinrel/balance/balance.hpp"
#include "clinrel/corpus/bio.hpp"
#include "clinrel/corpus/io.hpp"
#include "clinrel/metrics/metrics.hpp"
#include "clinrel/pairs/pairs.hpp"
#include "clinrel/relclass/relclass.hpp"
#include "clinrel/tagger/bilstm.hpp"
#include "clinrel/tagger/crf.hpp"
#include "oracles.hpp"

using namespace clinrel;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome crf_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(1, 4), width(1, 5);
  double worst = 0;
  std::size_t bad_viterbi = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t T = len(rng), K = width(rng);
    const auto crf = oracle::random_crf(K, rng);
    const Matrix em = oracle::random_matrix(T, K, rng, 2.0);
    const auto e = oracle::enumerate_paths(em, crf);
    worst = std::max(worst, std::abs(crf_log_partition(em, crf) - e.log_partition));
    const auto v = crf_viterbi(em, crf);
    if (v.score != e.best || v.labels != e.best_path) ++bad_viterbi;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && bad_viterbi == 0 && secs < 10.0,
          "max |logZ err| " + fmt(worst) + ", viterbi mismatches " + std::to_string(bad_viterbi) + ", " + fmt(secs) +
              " s"};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <class Grad, class Param>
void compare(double& worst, const Grad& g, Param&& p, const std::function<double()>& loss) {
  for (std::size_t i = 0; i < p.size(); ++i)
    worst = std::max(worst, oracle::relative_error(g[i], oracle::central_difference(p[i], loss)));
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double crf_worst = 0, lstm_worst = 0, mlp_worst = 0, focal_worst = 0;

  for (int rep = 0; rep < 5; ++rep) {
    auto crf = oracle::random_crf(5, rng);
    Matrix em = oracle::random_matrix(4, 5, rng);
    std::vector<std::size_t> y(4);
    for (auto& v : y) v = rng() % 5;
    const auto g = crf_nll(em, crf, y).gradients;
    auto nll = [&] { return crf_nll(em, crf, y).nll; };
    compare(crf_worst, g.emissions.values(), em.values(), nll);
    compare(crf_worst, g.transitions.values(), crf.transitions().values(), nll);
    compare(crf_worst, g.start, crf.start(), nll);
    compare(crf_worst, g.end, crf.end(), nll);
  }

  for (std::size_t layers : {1, 2}) {
    BiLstmParams p(3, 3, layers);
    p.initialize(rng);
    Matrix x = oracle::random_matrix(4, 3, rng);
    const Matrix r = oracle::random_matrix(4, 6, rng);
    BiLstmCache cache;
    bilstm_forward(p, x, &cache);
    auto grads = p.zeros_like();
    const Matrix dx = bilstm_backward(p, cache, r, grads, true);
    auto loss = [&] {
      const Matrix out = bilstm_forward(p, x);
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * r.values()[i];
      return s;
    };
    std::vector<Matrix*> ps;
    std::vector<const Matrix*> gs;
    p.for_each_tensor([&](const std::string&, Matrix& m) { ps.push_back(&m); });
    grads.for_each_tensor([&](const std::string&, const Matrix& m) { gs.push_back(&m); });
    for (std::size_t k = 0; k < ps.size(); ++k) compare(lstm_worst, gs[k]->values(), ps[k]->values(), loss);
    compare(lstm_worst, dx.values(), x.values(), loss);
  }

  for (int rep = 0; rep < 3; ++rep) {
    const std::vector<std::size_t> hidden{6, 4, 3};
    auto p = MlpParams::initialize(5, hidden, 0.5, 300 + rep);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& b : p.biases)
      for (double& v : b.values()) v = n(rng);
    std::vector<double> x(5);
    for (double& v : x) v = n(rng) * 3;
    const int label = rep % 2;
    MlpTrace trace;
    const double z = mlp_logit(p, x, nullptr, &trace);
    auto grads = p.zeros_like();
    mlp_backward(p, trace, focal_loss(sigmoid(z), label, 2.0, 0.25).dlogit, grads);
    auto loss = [&] { return focal_loss(sigmoid(mlp_logit(p, x)), label, 2.0, 0.25).loss; };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      compare(mlp_worst, grads.weights[l].values(), p.weights[l].values(), loss);
      compare(mlp_worst, grads.biases[l].values(), p.biases[l].values(), loss);
    }
  }

  for (int label : {0, 1})
    for (double z : {-2.5, -0.3, 0.0, 0.7, 3.0}) {
      double zz = z;
      const double fd = oracle::central_difference(zz, [&] { return focal_loss(sigmoid(zz), label, 2.0, 0.25).loss; });
      focal_worst = std::max(focal_worst, oracle::relative_error(focal_loss(sigmoid(z), label, 2.0, 0.25).dlogit, fd));
    }

  const double secs = seconds_since(t0);
  return {crf_worst < 1e-4 && mlp_worst < 1e-4 && focal_worst < 1e-4 && lstm_worst < 1e-3 && secs < 60.0,
          "crf " + fmt(crf_worst) + ", lstm " + fmt(lstm_worst) + ", mlp " + fmt(mlp_worst) + ", focal " +
              fmt(focal_worst) + ", " + fmt(secs) + " s"};
}

Outcome bio_round_trip() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> len(1, 60);
  std::size_t failures = 0, spans = 0;
  for (int i = 0; i < 1000; ++i) {
    const Document d = oracle::random_document(len(rng), rng);
    const auto labels = encode_bio(d);
    const auto back = decode_bio(labels);
    spans += d.entities.size();
    bool ok = back.size() == d.entities.size();
    for (std::size_t k = 0; ok && k < back.size(); ++k)
      ok = back[k].same_extent(d.entities[k]) && back[k].id == d.entities[k].id;
    failures += !ok;
  }
  return {failures == 0, std::to_string(failures) + " failures over 1000 documents, " + std::to_string(spans) + " spans"};
}

Outcome binary_micro_identity() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> size(1, 200);
  std::uniform_real_distribution<double> rate(0.05, 0.95);
  std::size_t failures = 0;
  for (int i = 0; i < 100; ++i) {
    std::bernoulli_distribution pc(rate(rng)), gc(rate(rng));
    std::vector<bool> p, g;
    for (int j = size(rng); j > 0; --j) {
      p.push_back(pc(rng));
      g.push_back(gc(rng));
    }
    const auto a = aggregate(binary_class_counts(p, g));
    failures += !(a.micro.precision == a.micro.recall && a.micro.recall == a.micro.f);
  }
  return {failures == 0, std::to_string(failures) + " of 100 sets differ"};
}

Outcome threshold_selection() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> size(1, 50), buckets(2, 30);
  std::size_t failures = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng);
    std::uniform_int_distribution<int> bucket(0, buckets(rng));
    std::bernoulli_distribution coin(0.35);
    std::vector<double> s;
    std::vector<bool> l;
    for (int j = 0; j < n; ++j) {
      s.push_back(bucket(rng) / 30.0);
      l.push_back(coin(rng));
    }
    l[rng() % static_cast<std::size_t>(n)] = true;
    for (double beta : {1.0, 2.0}) {
      // exhaustive: every distinct score is a candidate cut
      double best_f = -1;
      std::vector<double> optimal;
      for (double t : s) {
        const double f = oracle::f_at(s, l, t, beta);
        if (f > best_f + 1e-12) {
          best_f = f;
          optimal = {t};
        } else if (std::abs(f - best_f) <= 1e-12) {
          optimal.push_back(t);
        }
      }
      const auto got = select_threshold(s, l, beta);
      const bool ok = std::find(optimal.begin(), optimal.end(), got.threshold) != optimal.end() &&
                      std::abs(oracle::f_at(s, l, got.threshold, beta) - best_f) <= 1e-12 &&
                      std::abs(got.f - best_f) <= 1e-12;
      failures += !ok;
    }
  }
  return {failures == 0, std::to_string(failures) + " of 200 selections off the optimum"};
}

Outcome group_evaluation() {
  std::mt19937_64 rng(606);
  std::size_t failures = 0, order = 0;
  for (int i = 0; i < 100; ++i) {
    Document d;
    d.id = "g" + std::to_string(i);
    const std::size_t drugs = 1 + rng() % 4, disorders = 1 + rng() % 3;
    for (std::size_t k = 0; k < drugs + disorders; ++k) {
      d.tokens.push_back({"w", 2 * k, 2 * k + 1, 0});
      d.text += k ? " w" : "w";
      const bool drug = k < drugs;
      d.entities.push_back({(drug ? "D" : "S") + std::to_string(k), drug ? EntityKind::Drug : EntityKind::Disorder,
                            k, k + 1});
    }
    std::vector<clinrel::PairKey> all;
    for (std::size_t a = 0; a < drugs; ++a)
      for (std::size_t b = drugs; b < drugs + disorders; ++b) all.emplace_back(d.entities[a].id, d.entities[b].id);
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t nrel = 1 + rng() % all.size();
    std::map<std::string, clinrel::PairKey> by_id;
    for (std::size_t r = 0; r < nrel; ++r) {
      const std::string id = "R" + std::to_string(r);
      d.relations.push_back({id, all[r].first, all[r].second, RelationLabel::Ade});
      by_id[id] = all[r];
    }
    // random partition of the relations into groups
    std::vector<std::vector<std::string>> members;
    for (std::size_t r = 0; r < nrel; ++r) {
      const std::size_t slot = rng() % (members.size() + 1);
      if (slot == members.size()) members.emplace_back();
      members[slot].push_back("R" + std::to_string(r));
    }
    std::vector<std::vector<clinrel::PairKey>> oracle_groups;
    for (std::size_t g = 0; g < members.size(); ++g) {
      d.groups.push_back({"G" + std::to_string(g), members[g]});
      oracle_groups.emplace_back();
      for (const auto& m : members[g]) oracle_groups.back().push_back(by_id[m]);
    }
    std::set<clinrel::PairKey> predicted;
    std::bernoulli_distribution keep(0.5);
    for (const auto& k : all)
      if (keep(rng)) predicted.insert(k);

    const auto [easy, hard] = oracle::group_fractions(oracle_groups, predicted);
    const double e = evaluate_groups(predicted, d, GroupMode::Easy);
    const double h = evaluate_groups(predicted, d, GroupMode::Hard);
    failures += !(e == easy && h == hard);
    order += !(e >= h);
  }
  return {failures == 0 && order == 0,
          std::to_string(failures) + " oracle mismatches, " + std::to_string(order) + " easy < hard"};
}

Outcome smote_rebalance() {
  std::mt19937_64 rng(707);
  std::size_t off_segment = 0, points = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 3 + rng() % 10, dim = 1 + rng() % 5, k = 1 + rng() % (n - 1);
    const Matrix pts = oracle::random_matrix(n, dim, rng);
    const Matrix syn = smote_synthesize(pts, k, 25, 1000 + i);
    for (std::size_t r = 0; r < syn.rows(); ++r) off_segment += !oracle::on_knn_segment(syn.row(r), pts, k);
    points += syn.rows();
  }
  Matrix x = oracle::random_matrix(1005, 4, rng);
  std::vector<int> y(1005, 0);
  std::fill(y.begin(), y.begin() + 5, 1);
  RebalanceConfig cfg;
  cfg.target_ratio = 0.4;
  cfg.minority_multiplier = 4;
  cfg.smote_k = 3;
  cfg.seed = 17;
  const auto a = rebalance(x, y, cfg);
  const auto b = rebalance(x, y, cfg);
  const auto pos = std::count(a.labels.begin(), a.labels.end(), 1);
  const auto neg = std::count(a.labels.begin(), a.labels.end(), 0);
  const bool same = a.features == b.features && a.labels == b.labels &&
                    smote_synthesize(x, 3, 40, 5) == smote_synthesize(x, 3, 40, 5);
  return {off_segment == 0 && pos == 20 && neg == 50 && same,
          std::to_string(off_segment) + "/" + std::to_string(points) + " off-segment, rebalanced " +
              std::to_string(pos) + "/" + std::to_string(neg) + (same ? ", reproducible" : ", NOT reproducible")};
}

Outcome feature_layouts() {
  const auto t = FeatureLayout::transformer(768, 8);
  const auto b = FeatureLayout::bilstm(300, 256, 5);
  const std::vector<Segment> t_table{{"context.drug_sentence", 0, 768}, {"context.disorder_sentence", 768, 768},
                                     {"entity.drug", 1536, 768},        {"entity.disorder", 2304, 768},
                                     {"probs.drug", 3072, 8},           {"probs.disorder", 3080, 8}};
  const std::vector<Segment> b_table{{"static.drug", 0, 300},
                                     {"static.disorder", 300, 300},
                                     {"static.drug_sentence", 600, 300},
                                     {"static.disorder_sentence", 900, 300},
                                     {"hidden.drug", 1200, 256},
                                     {"hidden.disorder", 1456, 256},
                                     {"hidden.drug_sentence", 1712, 256},
                                     {"hidden.disorder_sentence", 1968, 256},
                                     {"probs.drug", 2224, 5},
                                     {"probs.disorder", 2229, 5}};

  std::mt19937_64 rng(808);
  Document d;
  d.id = "layout";
  for (std::size_t i = 0; i < 12; ++i) {
    if (!d.text.empty()) d.text += ' ';
    const std::size_t s = d.text.size();
    d.text += "w";
    d.tokens.push_back({"w", s, s + 1, i / 4});
  }
  d.entities = {{"T1", EntityKind::Drug, 1, 3}, {"T2", EntityKind::Disorder, 9, 10}};
  const auto pairs = generate_candidates(d, d.entities);
  const Matrix tok300 = oracle::random_matrix(12, 300, rng), hid = oracle::random_matrix(12, 256, rng);
  const Matrix tok768 = oracle::random_matrix(12, 768, rng), ctx = oracle::random_matrix(3, 768, rng);
  const Matrix p5(12, 5, 0.2), p8(12, 8, 0.125);
  const auto vb = assemble_features(d, pairs.at(0), {&tok300, &hid, nullptr, &p5}, b);
  const auto vt = assemble_features(d, pairs.at(0), {&tok768, nullptr, &ctx, &p8}, t);
  const bool ok = t.size() == 3088 && b.size() == 2234 && vt.size() == 3088 && vb.size() == 2234 &&
                  t.segments() == t_table && b.segments() == b_table;
  return {ok, "transformer " + std::to_string(vt.size()) + ", bilstm " + std::to_string(vb.size())};
}

// Settings used for the synthetic runs (see README).
app::RunConfig synthetic_config(const fs::path& dir) {
  app::RunConfig c;
  c.corpus = dir / "corpus.jsonl";
  c.word_vectors = dir / "vectors.txt";
  c.ner.learning_rate = 0.5;
  c.ner.batch_size = 8;
  c.ner.max_epochs = 12;
  c.ner.patience = 4;
  c.rc.hidden = {128, 64, 16};
  c.rc.learning_rate = 1e-3;
  c.rc.max_epochs = 40;
  c.rc.patience = 8;
  c.rc.batch_size = 64;
  return c;
}

struct EndToEnd {
  fs::path dir;
  bool ran = false;
  Outcome outcome;
};

EndToEnd& end_to_end_state() {
  static EndToEnd s = [] {
    EndToEnd e;
    e.dir = fs::temp_directory_path() / ("clinrel_acceptance_" + std::to_string(::getpid()));
    return e;
  }();
  return s;
}

double report_value(const std::vector<ReportRow>& rows, const std::string& task, const std::string& mode,
                    const std::string& metric) {
  for (const auto& r : rows)
    if (r.task == task && r.mode == mode && r.metric == metric) return r.mean;
  return std::nan("");
}

Outcome synthetic_end_to_end() {
  auto& st = end_to_end_state();
  if (st.ran) return st.outcome;
  st.ran = true;
  fs::remove_all(st.dir);
  fs::create_directories(st.dir / "data");
  const auto t0 = Clock::now();
  auto cfg = synthetic_config(st.dir / "data");

  app::SyntheticOptions so;
  so.documents = 240;
  const auto docs = app::generate_synthetic_corpus(so);
  write_corpus_file(cfg.corpus, docs);
  {
    std::ofstream v(cfg.word_vectors);
    app::synthetic_word_vectors(300, cfg.seed).write(v);
  }
  const auto cv = app::cross_validate(cfg, st.dir / "cv");
  const double ner = report_value(cv.report, "task1", "strict", "micro_f1");
  const double ade = report_value(cv.report, "task3_ade", "strict@f1", "macro_f1");

  app::SyntheticOptions ext;
  ext.documents = 120;
  ext.seed = 991;
  ext.id_prefix = "ext";
  const auto ext_docs = app::generate_synthetic_corpus(ext);
  const auto store = app::InputStore::load(cfg, ext_docs);
  const auto doc = app::document_evaluation(cfg, ext_docs, store.source(), st.dir / "cv", st.dir / "doc");
  double recall = std::nan("");
  for (const auto& r : doc.report)
    if (r.mode == "f2" && r.metric == "recall") recall = r.mean;
  const double secs = seconds_since(t0);

  st.outcome = {docs.size() >= 200 && ner >= 0.95 && ade >= 0.90 && recall >= 0.90 && secs < 900.0,
                "NER strict micro-F1 " + fmt(ner) + ", ADE end-to-end macro-F1 " + fmt(ade) +
                    ", external doc recall@F2 " + fmt(recall) + ", " + fmt(secs) + " s"};
  return st.outcome;
}

Outcome protocol_shape() {
  auto& st = end_to_end_state();
  if (!st.ran) synthetic_end_to_end();
  std::ifstream in(st.dir / "cv" / "report.csv");
  if (!in) return {false, "no report.csv"};
  const auto rows = read_report_csv(in);

  std::vector<std::tuple<std::string, std::string, std::string>> expected;
  for (const char* mode : {"strict", "lenient"})
    for (const char* avg : {"micro", "macro", "drug", "disorder"})
      for (const char* m : {"precision", "recall", "f1"})
        expected.emplace_back("task1", mode, std::string(avg) + "_" + m);
  for (const char* task : {"task2", "task3"})
    for (const char* rel : {"ade", "indication"}) {
      std::vector<std::string> modes{"strict"};
      if (std::string(task) == "task3") modes.push_back("lenient");
      for (const auto& mode : modes)
        for (const char* th : {"f1", "f2"})
          for (const char* avg : {"micro", "macro"})
            for (const char* m : {"precision", "recall", "f1", "f2"})
              expected.emplace_back(std::string(task) + "_" + rel, mode + "@" + th, std::string(avg) + "_" + m);
    }
  for (const char* g : {"easy", "hard"})
    for (const char* th : {"f1", "f2"}) expected.emplace_back("ade_groups", std::string(g) + "@" + th, "detected_fraction");

  std::set<std::tuple<std::string, std::string, std::string>> want(expected.begin(), expected.end()), got;
  bool values_ok = true;
  for (const auto& r : rows) {
    got.emplace(r.task, r.mode, r.metric);
    values_ok = values_ok && std::isfinite(r.mean) && std::isfinite(r.std) && r.std >= 0 && r.model == "bilstm-crf";
  }
  std::size_t fold_dirs = 0;
  for (int f = 0; fs::exists(st.dir / "cv" / ("fold_" + std::to_string(f))); ++f) ++fold_dirs;
  const bool ok = got == want && rows.size() == want.size() && values_ok && fold_dirs == 5;
  return {ok, std::to_string(rows.size()) + " rows (expected " + std::to_string(want.size()) + "), " +
                  std::to_string(fold_dirs) + " folds"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"CRF oracle equivalence", crf_oracle},
      {"gradient suite", gradient_suite},
      {"BIO round trip", bio_round_trip},
      {"binary micro identity", binary_micro_identity},
      {"threshold selection", threshold_selection},
      {"group evaluation", group_evaluation},
      {"SMOTE/rebalance", smote_rebalance},
      {"feature layouts", feature_layouts},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"protocol shape", protocol_shape},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(end_to_end_state().dir);
  return failed == 0 ? 0 : 1;
}
