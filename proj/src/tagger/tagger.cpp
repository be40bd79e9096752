#include "clinrel/tagger/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "clinrel/binary_io.hpp"
#include "clinrel/corpus/bio.hpp"
#include "clinrel/error.hpp"
#include "clinrel/simd/kernels.hpp"

namespace clinrel {

std::string_view to_string(EncoderKind k) noexcept { return k == EncoderKind::BiLstm ? "bilstm" : "frozen"; }

std::optional<EncoderKind> parse_encoder_kind(std::string_view s) noexcept {
  if (s == "bilstm") return EncoderKind::BiLstm;
  if (s == "frozen") return EncoderKind::Frozen;
  return std::nullopt;
}

std::string_view to_string(TaggerLoss l) noexcept { return l == TaggerLoss::CrfNll ? "crf" : "ce"; }

std::optional<TaggerLoss> parse_tagger_loss(std::string_view s) noexcept {
  if (s == "crf") return TaggerLoss::CrfNll;
  if (s == "ce") return TaggerLoss::CrossEntropy;
  return std::nullopt;
}

void TaggerConfig::validate() const {
  if (num_layers < 1 || num_layers > 3) throw ConfigError("ner.num_layers must be 1, 2 or 3");
  if (hidden_total < 2 || hidden_total % 2 != 0) throw ConfigError("ner.hidden_total must be a positive even integer");
  if (!(learning_rate > 0.0)) throw ConfigError("ner.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("ner.batch_size must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("ner.weight_decay must be >= 0");
  if (patience < 1) throw ConfigError("ner.patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("ner.max_epochs must be >= 1");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) throw ConfigError("ner.warmup_ratio must be in [0, 1)");
  if (!(clip_norm > 0.0)) throw ConfigError("ner.clip_norm must be > 0");
}

nlohmann::json to_json(const TaggerConfig& c) {
  return {{"encoder", to_string(c.encoder)},
          {"num_layers", c.num_layers},
          {"hidden_total", c.hidden_total},
          {"hidden_per_direction", c.hidden_per_direction},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"weight_decay", c.weight_decay},
          {"scheduler", to_string(c.scheduler)},
          {"patience", c.patience},
          {"max_epochs", c.max_epochs},
          {"warmup_ratio", c.warmup_ratio},
          {"clip_norm", c.clip_norm},
          {"loss", to_string(c.loss)}};
}

TaggerConfig tagger_config_from_json(const nlohmann::json& j, TaggerConfig c) {
  if (!j.is_object()) throw ConfigError("ner: expected an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "encoder") {
        auto e = parse_encoder_kind(v.get<std::string>());
        if (!e) throw ConfigError("ner.encoder: unknown value '" + v.get<std::string>() + "'");
        c.encoder = *e;
      } else if (key == "num_layers") {
        c.num_layers = v.get<int>();
      } else if (key == "hidden_total") {
        c.hidden_total = v.get<int>();
      } else if (key == "hidden_per_direction") {
        c.hidden_per_direction = v.get<bool>();
      } else if (key == "learning_rate") {
        c.learning_rate = v.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = v.get<int>();
      } else if (key == "weight_decay") {
        c.weight_decay = v.get<double>();
      } else if (key == "scheduler") {
        auto s = parse_scheduler(v.get<std::string>());
        if (!s) throw ConfigError("ner.scheduler: unknown value '" + v.get<std::string>() + "'");
        c.scheduler = *s;
      } else if (key == "patience") {
        c.patience = v.get<int>();
      } else if (key == "max_epochs") {
        c.max_epochs = v.get<int>();
      } else if (key == "warmup_ratio") {
        c.warmup_ratio = v.get<double>();
      } else if (key == "clip_norm") {
        c.clip_norm = v.get<double>();
      } else if (key == "loss") {
        auto l = parse_tagger_loss(v.get<std::string>());
        if (!l) throw ConfigError("ner.loss: unknown value '" + v.get<std::string>() + "'");
        c.loss = *l;
      } else {
        throw ConfigError("ner: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ner: ") + e.what());
  }
  c.validate();
  return c;
}

TaggerGradients TaggerGradients::zeros_for(const TaggerParams& p) {
  TaggerGradients g;
  if (p.encoder) g.encoder = p.encoder->zeros_like();
  g.projection = p.projection.zeros_like();
  g.bias = p.bias.zeros_like();
  const std::size_t k = p.crf.num_labels();
  g.transitions = Matrix(k, k);
  g.start.assign(k, 0.0);
  g.end.assign(k, 0.0);
  return g;
}

void TaggerGradients::scale(double s) {
  auto mul = [s](std::span<double> v) {
    for (double& x : v) x *= s;
  };
  if (encoder) encoder->for_each_tensor([&](const std::string&, Matrix& m) { mul(m.values()); });
  mul(projection.values());
  mul(bias.values());
  mul(transitions.values());
  mul(start);
  mul(end);
}

double TaggerGradients::squared_norm() const {
  double s = 0.0;
  auto add = [&s](std::span<const double> v) {
    for (double x : v) s += x * x;
  };
  if (encoder) encoder->for_each_tensor([&](const std::string&, const Matrix& m) { add(m.values()); });
  add(projection.values());
  add(bias.values());
  add(transitions.values());
  add(start);
  add(end);
  return s;
}

TrainedTagger TrainedTagger::initialize(const TaggerConfig& config, std::size_t input_dim, std::uint64_t seed) {
  config.validate();
  if (input_dim == 0) throw ConfigError("tagger input width must be positive");
  TrainedTagger m;
  m.config_ = config;
  m.input_dim_ = input_dim;
  std::mt19937_64 rng(seed);
  if (config.encoder == EncoderKind::BiLstm) {
    m.params_.encoder.emplace(input_dim, config.units_per_direction(), static_cast<std::size_t>(config.num_layers));
    m.params_.encoder->initialize(rng);
  }
  const std::size_t k = LabelSet::core5().size();
  const std::size_t f = m.feature_width();
  m.params_.projection = Matrix(k, f);
  const double bound = std::sqrt(6.0 / static_cast<double>(k + f));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : m.params_.projection.values()) v = u(rng);
  m.params_.bias = Matrix(k, 1);
  m.params_.crf = CrfParams::for_label_set(LabelSet::core5());
  return m;
}

std::size_t TrainedTagger::feature_width() const noexcept {
  return params_.encoder ? params_.encoder->output_dim() : input_dim_;
}

Matrix TrainedTagger::sentence_hidden(const Matrix& inputs, BiLstmCache* cache) const {
  if (inputs.cols() != input_dim_)
    throw ShapeError("tagger input width " + std::to_string(inputs.cols()) + ", model expects " +
                     std::to_string(input_dim_));
  if (params_.encoder) return bilstm_forward(*params_.encoder, inputs, cache);
  return inputs;
}

Matrix TrainedTagger::sentence_emissions(const Matrix& hidden) const {
  const std::size_t k = params_.projection.rows();
  Matrix e(hidden.rows(), k);
  for (std::size_t t = 0; t < hidden.rows(); ++t) {
    simd::gemv(params_.projection, hidden.row(t), e.row(t));
    for (std::size_t j = 0; j < k; ++j) e(t, j) += params_.bias(j, 0);
  }
  return e;
}

namespace {

Matrix softmax_rows(const Matrix& e) {
  Matrix p(e.rows(), e.cols());
  for (std::size_t t = 0; t < e.rows(); ++t) {
    const auto row = e.row(t);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < e.cols(); ++j) z += (p(t, j) = std::exp(row[j] - m));
    for (std::size_t j = 0; j < e.cols(); ++j) p(t, j) /= z;
  }
  return p;
}

void copy_rows(const Matrix& src, Matrix& dst, std::size_t offset) {
  for (std::size_t t = 0; t < src.rows(); ++t) std::ranges::copy(src.row(t), dst.row(offset + t).begin());
}

std::vector<std::size_t> gold_indices(const Document& doc) {
  const auto& set = LabelSet::core5();
  std::vector<std::size_t> out;
  for (Label l : encode_bio(doc)) out.push_back(set.index(l));
  return out;
}

}  // namespace

TaggerAnalysis TrainedTagger::analyze(const Document& doc, const Matrix& inputs) const {
  const std::size_t n = doc.tokens.size();
  if (inputs.rows() != n || inputs.cols() != input_dim_)
    throw ShapeError("document '" + doc.id + "': representations are " + std::to_string(inputs.rows()) + "x" +
                     std::to_string(inputs.cols()) + ", expected " + std::to_string(n) + "x" +
                     std::to_string(input_dim_));
  const auto& set = labels();
  TaggerAnalysis a;
  if (params_.encoder) a.hidden = Matrix(n, params_.encoder->output_dim());
  a.emissions = Matrix(n, set.size());
  a.labels.assign(n, Label::O);
  for (auto [b, e] : doc.sentence_ranges()) {
    const Matrix h = sentence_hidden(row_slice(inputs, b, e));
    const Matrix em = sentence_emissions(h);
    if (params_.encoder) copy_rows(h, a.hidden, b);
    copy_rows(em, a.emissions, b);
    const auto path = crf_viterbi(em, params_.crf);
    for (std::size_t t = 0; t < path.labels.size(); ++t) a.labels[b + t] = set.at(path.labels[t]);
  }
  a.probabilities = softmax_rows(a.emissions);
  a.spans = decode_bio(a.labels, "P");
  return a;
}

double sentence_loss(const TrainedTagger& model, const Matrix& inputs, std::span<const std::size_t> gold,
                     TaggerGradients* grads) {
  if (gold.size() != inputs.rows()) throw ShapeError("gold labels do not match the sentence length");
  const auto& p = model.params();
  BiLstmCache cache;
  const Matrix hidden = model.sentence_hidden(inputs, grads && p.encoder ? &cache : nullptr);
  const Matrix em = model.sentence_emissions(hidden);
  const std::size_t k = em.cols();

  double loss = 0.0;
  Matrix d_em;
  if (model.config().loss == TaggerLoss::CrfNll) {
    auto r = crf_nll(em, p.crf, gold);
    loss = r.nll;
    if (grads) {
      d_em = std::move(r.gradients.emissions);
      for (std::size_t i = 0; i < grads->transitions.size(); ++i)
        grads->transitions.values()[i] += r.gradients.transitions.values()[i];
      for (std::size_t j = 0; j < k; ++j) {
        grads->start[j] += r.gradients.start[j];
        grads->end[j] += r.gradients.end[j];
      }
    }
  } else {
    Matrix prob = softmax_rows(em);
    for (std::size_t t = 0; t < em.rows(); ++t) {
      loss -= std::log(std::max(prob(t, gold[t]), 1e-300));
      prob(t, gold[t]) -= 1.0;
    }
    d_em = std::move(prob);
  }
  if (!grads) return loss;

  Matrix d_hidden(hidden.rows(), hidden.cols());
  for (std::size_t t = 0; t < em.rows(); ++t) {
    simd::rank1_add(grads->projection, 1.0, d_em.row(t), hidden.row(t));
    for (std::size_t j = 0; j < k; ++j) grads->bias(j, 0) += d_em(t, j);
    if (p.encoder) simd::gemv_transposed_add(p.projection, d_em.row(t), d_hidden.row(t));
  }
  if (p.encoder) bilstm_backward(*p.encoder, cache, d_hidden, *grads->encoder);
  return loss;
}

Matrix token_probabilities(const TrainedTagger& model, const Document& doc, const Matrix& inputs) {
  return model.analyze(doc, inputs).probabilities;
}

EntityPrediction predict_entities(const TrainedTagger& model, const Document& doc, const Matrix& inputs) {
  auto a = model.analyze(doc, inputs);
  return {std::move(a.spans), std::move(a.probabilities)};
}

double validation_f1(const TrainedTagger& model, std::span<const TaggerExample> examples) {
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (const auto& ex : examples) {
    const auto pred = predict_entities(model, *ex.doc, ex.inputs).spans;
    std::set<std::tuple<EntityKind, std::size_t, std::size_t>> gold;
    for (const auto& g : ex.doc->entities) gold.emplace(g.kind, g.token_start, g.token_end);
    for (const auto& s : pred) tp += gold.count({s.kind, s.token_start, s.token_end});
    n_pred += pred.size();
    n_gold += gold.size();
  }
  const double denom = static_cast<double>(2 * tp + (n_pred - tp) + (n_gold - tp));
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

namespace {

struct Sentence {
  Matrix inputs;
  std::vector<std::size_t> gold;
};

std::vector<Sentence> collect_sentences(std::span<const TaggerExample> examples) {
  std::vector<Sentence> out;
  for (const auto& ex : examples) {
    if (ex.inputs.rows() != ex.doc->tokens.size())
      throw ShapeError("document '" + ex.doc->id + "': representation rows do not match tokens");
    const auto gold = gold_indices(*ex.doc);
    for (auto [b, e] : ex.doc->sentence_ranges())
      out.push_back({row_slice(ex.inputs, b, e), {gold.begin() + static_cast<std::ptrdiff_t>(b),
                                                   gold.begin() + static_cast<std::ptrdiff_t>(e)}});
  }
  return out;
}

// Decoupled decay: w <- w * (1 - lr * wd) - lr * g.
void sgd_step(Matrix& w, const Matrix& g, double lr, double wd) {
  const double keep = 1.0 - lr * wd;
  auto wv = w.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = wv[i] * keep - lr * gv[i];
}

void apply_update(TaggerParams& p, const TaggerGradients& g, double lr, double wd) {
  if (p.encoder) {
    std::vector<const Matrix*> gs;
    g.encoder->for_each_tensor([&](const std::string&, const Matrix& m) { gs.push_back(&m); });
    std::size_t i = 0;
    p.encoder->for_each_tensor([&](const std::string&, Matrix& m) { sgd_step(m, *gs[i++], lr, wd); });
  }
  sgd_step(p.projection, g.projection, lr, wd);
  sgd_step(p.bias, g.bias, lr, 0.0);
  auto& crf = p.crf;
  const std::size_t k = crf.num_labels();
  for (std::size_t a = 0; a < k; ++a) {
    if (!crf.start_pinned(a)) crf.start()[a] -= lr * g.start[a];
    crf.end()[a] -= lr * g.end[a];
    for (std::size_t b = 0; b < k; ++b)
      if (!crf.transition_pinned(a, b))
        crf.transitions()(a, b) = crf.transitions()(a, b) * (1.0 - lr * wd) - lr * g.transitions(a, b);
  }
  crf.enforce_pins();
}

}  // namespace

TrainedTagger train_tagger(std::span<const TaggerExample> train, std::span<const TaggerExample> validation,
                           const TaggerConfig& config, std::uint64_t seed) {
  if (train.empty()) throw ConfigError("tagger training set is empty");
  if (validation.empty()) throw ConfigError("tagger validation set is empty");
  const std::size_t dim = train.front().inputs.cols();
  TrainedTagger model = TrainedTagger::initialize(config, dim, seed);

  const auto train_sents = collect_sentences(train);
  const auto val_sents = collect_sentences(validation);
  if (train_sents.empty()) throw ConfigError("tagger training set has no tokens");

  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (train_sents.size() + batch - 1) / batch;
  LearningRateSchedule schedule(config.learning_rate, config.scheduler,
                                steps_per_epoch * static_cast<std::size_t>(config.max_epochs), config.warmup_ratio);
  EarlyStopper stopper(config.patience, EarlyStopper::Goal::Maximize);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_sents.size());
  std::iota(order.begin(), order.end(), 0);
  TaggerParams best = model.params();
  std::size_t step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_loss = 0.0;
    double lr = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      const std::size_t b1 = std::min(order.size(), b0 + batch);
      auto grads = TaggerGradients::zeros_for(model.params());
      for (std::size_t i = b0; i < b1; ++i) {
        const auto& s = train_sents[order[i]];
        train_loss += sentence_loss(model, s.inputs, s.gold, &grads);
      }
      grads.scale(1.0 / static_cast<double>(b1 - b0));
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > config.clip_norm) grads.scale(config.clip_norm / norm);
      lr = schedule.rate(++step);
      apply_update(model.params(), grads, lr, config.weight_decay);
    }

    double val_loss = 0.0;
    for (const auto& s : val_sents) val_loss += sentence_loss(model, s.inputs, s.gold, nullptr);
    val_loss /= static_cast<double>(std::max<std::size_t>(val_sents.size(), 1));
    const double f1 = validation_f1(model, validation);
    model.history().epochs.push_back(
        {epoch, train_loss / static_cast<double>(train_sents.size()), val_loss, f1, lr});
    spdlog::debug("ner epoch {} train_loss={:.4f} val_loss={:.4f} val_f1={:.4f} lr={:.3g}", epoch,
                  model.history().epochs.back().train_loss, val_loss, f1, lr);
    schedule.end_epoch(val_loss);
    if (stopper.update(f1)) best = model.params();
    if (stopper.should_stop()) break;
  }
  model.params() = std::move(best);
  model.history().best_epoch = stopper.best_epoch();
  return model;
}

namespace {

constexpr std::uint32_t kTagVersion = 1;

nlohmann::json history_json(const TaggerHistory& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"val_f1", e.val_f1},
                      {"lr", e.learning_rate}});
  return {{"epochs", epochs}, {"best_epoch", h.best_epoch}};
}

TaggerHistory history_from_json(const nlohmann::json& j) {
  TaggerHistory h;
  for (const auto& e : j.at("epochs"))
    h.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>(),
                        e.at("val_f1").get<double>(), e.at("lr").get<double>()});
  h.best_epoch = j.at("best_epoch").get<int>();
  return h;
}

Matrix vector_row(const std::vector<double>& v) {
  Matrix m(1, v.size());
  std::ranges::copy(v, m.values().begin());
  return m;
}

}  // namespace

void TrainedTagger::save(std::ostream& out) const {
  const auto& set = labels();
  bin::write_magic(out, "TAG1");
  bin::write_u32(out, kTagVersion);
  bin::write_u32(out, static_cast<std::uint32_t>(set.id()));
  bin::write_u32(out, static_cast<std::uint32_t>(set.size()));
  for (Label l : set.labels()) bin::write_string(out, to_string(l));

  std::vector<std::pair<std::string, const Matrix*>> tensors;
  if (params_.encoder)
    params_.encoder->for_each_tensor([&](const std::string& n, const Matrix& m) { tensors.emplace_back(n, &m); });
  const Matrix start = vector_row(params_.crf.start());
  const Matrix end = vector_row(params_.crf.end());
  tensors.emplace_back("proj.w", &params_.projection);
  tensors.emplace_back("proj.b", &params_.bias);
  tensors.emplace_back("crf.transitions", &params_.crf.transitions());
  tensors.emplace_back("crf.start", &start);
  tensors.emplace_back("crf.end", &end);

  bin::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    bin::write_string(out, name);
    bin::write_u32(out, static_cast<std::uint32_t>(m->rows()));
    bin::write_u32(out, static_cast<std::uint32_t>(m->cols()));
    bin::write_f32_block(out, *m);
  }
  const nlohmann::json meta{{"config", to_json(config_)}, {"input_dim", input_dim_}, {"history", history_json(history_)}};
  bin::write_string(out, meta.dump());
}

void TrainedTagger::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save(out);
}

TrainedTagger TrainedTagger::load(std::istream& in) {
  bin::Reader r(in, "TAG1");
  r.expect_magic("TAG1");
  if (const auto v = r.u32(); v != kTagVersion) r.fail("unsupported version " + std::to_string(v));
  const auto set_id = r.u32();
  if (set_id != static_cast<std::uint32_t>(LabelSetId::Core5)) r.fail("tagger checkpoints are core5 only");
  const auto& set = LabelSet::core5();
  if (r.u32() != set.size()) r.fail("label count mismatch");
  for (Label l : set.labels())
    if (r.string() != to_string(l)) r.fail("label order mismatch");

  struct Raw {
    std::string name;
    Matrix m;
  };
  std::vector<Raw> raw;
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.string();
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) r.fail("tensor '" + name + "' is implausibly large");
    raw.push_back({std::move(name), r.f32_block(rows, cols)});
  }
  TrainedTagger m;
  try {
    const auto meta = nlohmann::json::parse(r.string());
    m = initialize(tagger_config_from_json(meta.at("config")), meta.at("input_dim").get<std::size_t>(), 0);
    m.history_ = history_from_json(meta.at("history"));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad metadata: ") + e.what());
  } catch (const ConfigError& e) {
    r.fail(std::string("bad metadata: ") + e.what());
  }

  auto take = [&](const std::string& name, Matrix& dst) {
    auto it = std::ranges::find(raw, name, &Raw::name);
    if (it == raw.end()) r.fail("missing tensor '" + name + "'");
    if (!it->m.same_shape(dst)) r.fail("tensor '" + name + "' has the wrong shape");
    dst = std::move(it->m);
  };
  if (m.params_.encoder) m.params_.encoder->for_each_tensor([&](const std::string& n, Matrix& t) { take(n, t); });
  take("proj.w", m.params_.projection);
  take("proj.b", m.params_.bias);
  take("crf.transitions", m.params_.crf.transitions());
  Matrix start = vector_row(m.params_.crf.start());
  Matrix end = vector_row(m.params_.crf.end());
  take("crf.start", start);
  take("crf.end", end);
  std::ranges::copy(start.values(), m.params_.crf.start().begin());
  std::ranges::copy(end.values(), m.params_.crf.end().begin());
  m.params_.crf.enforce_pins();
  return m;
}

TrainedTagger TrainedTagger::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return load(in);
}

}  // namespace clinrel
