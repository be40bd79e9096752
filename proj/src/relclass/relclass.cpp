#include "clinrel/relclass/relclass.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "clinrel/binary_io.hpp"
#include "clinrel/error.hpp"
#include "clinrel/metrics/metrics.hpp"
#include "clinrel/simd/kernels.hpp"
#include "clinrel/training.hpp"

namespace clinrel {

namespace {

constexpr double kFocalEps = 1e-7;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.dropout = dropout;
  for (const auto& w : weights) z.weights.push_back(w.zeros_like());
  for (const auto& b : biases) z.biases.push_back(b.zeros_like());
  return z;
}

MlpParams MlpParams::initialize(std::size_t input_dim, std::span<const std::size_t> hidden, double dropout,
                                std::uint64_t seed) {
  if (hidden.size() != 3) throw ConfigError("the relation classifier has exactly three hidden layers");
  MlpParams p;
  p.dropout = dropout;
  std::mt19937_64 rng(seed);
  std::size_t in = input_dim;
  std::vector<std::size_t> widths(hidden.begin(), hidden.end());
  widths.push_back(1);
  for (std::size_t out : widths) {
    Matrix w(out, in);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w.values()) v = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 1);
    in = out;
  }
  return p;
}

double mlp_logit(const MlpParams& params, std::span<const double> x, std::mt19937_64* rng, MlpTrace* trace) {
  if (x.size() != params.input_dim())
    throw ShapeError("classifier input width " + std::to_string(x.size()) + ", expected " +
                     std::to_string(params.input_dim()));
  const std::size_t layers = params.weights.size();
  if (trace) *trace = {};
  std::vector<double> a(x.begin(), x.end());
  std::bernoulli_distribution keep(1.0 - params.dropout);
  const double scale = params.dropout < 1.0 ? 1.0 / (1.0 - params.dropout) : 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params.weights[l];
    std::vector<double> z(w.rows());
    simd::gemv(w, a, z);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += params.biases[l](j, 0);
    if (trace) trace->inputs.push_back(a);
    if (l + 1 == layers) return z[0];
    std::vector<double> m(z.size(), 1.0);
    if (rng)
      for (double& v : m) v = keep(*rng) ? scale : 0.0;
    a.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) a[j] = z[j] > 0.0 ? z[j] * m[j] : 0.0;
    if (trace) {
      trace->pre.push_back(std::move(z));
      trace->mask.push_back(std::move(m));
    }
  }
  return 0.0;
}

double mlp_forward(const MlpParams& params, std::span<const double> x, bool train_mode, std::uint64_t seed) {
  if (!train_mode) return sigmoid(mlp_logit(params, x));
  std::mt19937_64 rng(seed);
  return sigmoid(mlp_logit(params, x, &rng));
}

void mlp_backward(const MlpParams& params, const MlpTrace& trace, double dlogit, MlpParams& grads) {
  const std::size_t layers = params.weights.size();
  std::vector<double> delta{dlogit};
  for (std::size_t l = layers; l-- > 0;) {
    simd::rank1_add(grads.weights[l], 1.0, delta, trace.inputs[l]);
    for (std::size_t j = 0; j < delta.size(); ++j) grads.biases[l](j, 0) += delta[j];
    if (l == 0) break;
    std::vector<double> da(params.weights[l].cols(), 0.0);
    simd::gemv_transposed_add(params.weights[l], delta, da);
    const auto& pre = trace.pre[l - 1];
    const auto& mask = trace.mask[l - 1];
    for (std::size_t j = 0; j < da.size(); ++j) da[j] = pre[j] > 0.0 ? da[j] * mask[j] : 0.0;
    delta = std::move(da);
  }
}

FocalLoss focal_loss(double p, int y, double gamma, double alpha) {
  p = std::clamp(p, kFocalEps, 1.0 - kFocalEps);
  if (y != 0) {
    const double q = 1.0 - p;
    return {-alpha * std::pow(q, gamma) * std::log(p), alpha * std::pow(q, gamma) * (gamma * p * std::log(p) - q)};
  }
  const double q = 1.0 - p;
  return {-(1.0 - alpha) * std::pow(p, gamma) * std::log(q),
          (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * q * std::log(q))};
}

std::string_view to_string(SelectionMetric m) noexcept {
  switch (m) {
    case SelectionMetric::F1:
      return "f1";
    case SelectionMetric::F2:
      return "f2";
    case SelectionMetric::ValLoss:
      return "val_loss";
  }
  return "?";
}

std::optional<SelectionMetric> parse_selection_metric(std::string_view s) noexcept {
  for (auto m : {SelectionMetric::F1, SelectionMetric::F2, SelectionMetric::ValLoss})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

void RcTrainConfig::validate() const {
  if (hidden.size() != 3 || std::ranges::count(hidden, 0u) > 0)
    throw ConfigError("rc.hidden must list three positive widths");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("rc.dropout must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("rc.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("rc.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("rc.max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("rc.patience must be >= 1");
  if (focal_gamma < 0.0) throw ConfigError("rc.focal_gamma must be >= 0");
  if (!(focal_alpha > 0.0 && focal_alpha < 1.0)) throw ConfigError("rc.focal_alpha must be in (0, 1)");
}

nlohmann::json to_json(const RcTrainConfig& c) {
  return {{"hidden", c.hidden},
          {"dropout", c.dropout},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"focal_gamma", c.focal_gamma},
          {"focal_alpha", c.focal_alpha},
          {"selection_metric", to_string(c.selection_metric)}};
}

RcTrainConfig rc_config_from_json(const nlohmann::json& j, RcTrainConfig c) {
  if (!j.is_object()) throw ConfigError("rc: expected an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "hidden") {
        c.hidden = v.get<std::vector<std::size_t>>();
      } else if (key == "dropout") {
        c.dropout = v.get<double>();
      } else if (key == "learning_rate") {
        c.learning_rate = v.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = v.get<std::size_t>();
      } else if (key == "max_epochs") {
        c.max_epochs = v.get<int>();
      } else if (key == "patience") {
        c.patience = v.get<int>();
      } else if (key == "focal_gamma") {
        c.focal_gamma = v.get<double>();
      } else if (key == "focal_alpha") {
        c.focal_alpha = v.get<double>();
      } else if (key == "selection_metric") {
        auto m = parse_selection_metric(v.get<std::string>());
        if (!m) throw ConfigError("rc.selection_metric: unknown value '" + v.get<std::string>() + "'");
        c.selection_metric = *m;
      } else {
        throw ConfigError("rc: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("rc: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<double> score_pairs(const MlpParams& params, const Matrix& features) {
  std::vector<double> out;
  out.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out.push_back(sigmoid(mlp_logit(params, features.row(i))));
  return out;
}

DocumentPrediction predict_document(std::span<const double> scores, double threshold) {
  const double s = scores.empty() ? 0.0 : *std::ranges::max_element(scores);
  return {s >= threshold, s};
}

namespace {

class Adam {
 public:
  explicit Adam(const MlpParams& shape) : m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(MlpParams& p, const MlpParams& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kB1, t_);
    const double c2 = 1.0 - std::pow(kB2, t_);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      update(p.weights[l], g.weights[l], m_.weights[l], v_.weights[l], lr, c1, c2);
      update(p.biases[l], g.biases[l], m_.biases[l], v_.biases[l], lr, c1, c2);
    }
  }

 private:
  static constexpr double kB1 = 0.9;
  static constexpr double kB2 = 0.999;
  static constexpr double kEps = 1e-8;

  static void update(Matrix& w, const Matrix& g, Matrix& m, Matrix& v, double lr, double c1, double c2) {
    auto wv = w.values();
    auto gv = g.values();
    auto mv = m.values();
    auto vv = v.values();
    for (std::size_t i = 0; i < wv.size(); ++i) {
      mv[i] = kB1 * mv[i] + (1.0 - kB1) * gv[i];
      vv[i] = kB2 * vv[i] + (1.0 - kB2) * gv[i] * gv[i];
      wv[i] -= lr * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + kEps);
    }
  }

  MlpParams m_;
  MlpParams v_;
  int t_ = 0;
};

double best_f(const std::vector<double>& scores, const std::vector<bool>& labels, double beta) {
  if (std::ranges::find(labels, true) == labels.end()) return 0.0;
  return select_threshold(scores, labels, beta).f;
}

}  // namespace

TrainedRc train_rc(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                   std::span<const int> val_y, const RcTrainConfig& config, std::uint64_t seed) {
  config.validate();
  if (train_x.rows() == 0) throw ConfigError("relation training set is empty");
  if (val_x.rows() == 0) throw ConfigError("relation validation set is empty");
  if (train_y.size() != train_x.rows() || val_y.size() != val_x.rows())
    throw ConfigError("one label per feature row is required");
  if (val_x.cols() != train_x.cols()) throw ConfigError("training and validation feature widths differ");

  TrainedRc out;
  out.config = config;
  out.params = MlpParams::initialize(train_x.cols(), config.hidden, config.dropout, seed);
  Adam adam(out.params);
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(train_x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<bool> val_labels(val_y.begin(), val_y.end());

  const bool minimize = config.selection_metric == SelectionMetric::ValLoss;
  EarlyStopper stopper(config.patience, minimize ? EarlyStopper::Goal::Minimize : EarlyStopper::Goal::Maximize);
  MlpParams best = out.params;
  MlpTrace trace;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      MlpParams grads = out.params.zeros_like();
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      for (std::size_t i = b0; i < b1; ++i) {
        const std::size_t r = order[i];
        const double z = mlp_logit(out.params, train_x.row(r), &rng, &trace);
        const auto fl = focal_loss(sigmoid(z), train_y[r], config.focal_gamma, config.focal_alpha);
        train_loss += fl.loss;
        mlp_backward(out.params, trace, fl.dlogit * inv, grads);
      }
      adam.step(out.params, grads, config.learning_rate);
    }

    const auto scores = score_pairs(out.params, val_x);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      val_loss += focal_loss(scores[i], val_y[i], config.focal_gamma, config.focal_alpha).loss;
    val_loss /= static_cast<double>(scores.size());
    const RcEpoch rec{epoch, train_loss / static_cast<double>(order.size()), val_loss,
                      best_f(scores, val_labels, 1.0), best_f(scores, val_labels, 2.0)};
    out.history.push_back(rec);
    spdlog::debug("rc epoch {} train_loss={:.5f} val_loss={:.5f} val_f1={:.4f} val_f2={:.4f}", epoch,
                  rec.train_loss, val_loss, rec.val_f1, rec.val_f2);

    const double metric = config.selection_metric == SelectionMetric::F1   ? rec.val_f1
                          : config.selection_metric == SelectionMetric::F2 ? rec.val_f2
                                                                           : val_loss;
    if (stopper.update(metric)) {
      best = out.params;
      out.validation_scores = scores;
    }
    if (stopper.should_stop()) break;
  }
  out.params = std::move(best);
  out.best_epoch = stopper.best_epoch();
  return out;
}

namespace {

constexpr std::uint32_t kRcVersion = 1;

nlohmann::json history_json(const TrainedRc& m) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& e : m.history)
    h.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"val_loss", e.val_loss},
                 {"val_f1", e.val_f1},
                 {"val_f2", e.val_f2}});
  return h;
}

}  // namespace

void TrainedRc::save(std::ostream& out, const FeatureLayout& layout) const {
  if (layout.size() != params.input_dim()) throw ShapeError("layout width does not match the classifier input");
  bin::write_magic(out, "RCM1");
  bin::write_u32(out, kRcVersion);
  bin::write_string(out, to_json(layout).dump());
  bin::write_u32(out, static_cast<std::uint32_t>(params.weights.size()));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    bin::write_u32(out, static_cast<std::uint32_t>(params.weights[l].rows()));
    bin::write_u32(out, static_cast<std::uint32_t>(params.weights[l].cols()));
    bin::write_f32_block(out, params.weights[l]);
    bin::write_f32_block(out, params.biases[l]);
  }
  const nlohmann::json meta{{"config", to_json(config)},
                            {"history", history_json(*this)},
                            {"best_epoch", best_epoch},
                            {"validation_scores", validation_scores}};
  bin::write_string(out, meta.dump());
}

void TrainedRc::save_file(const std::filesystem::path& path, const FeatureLayout& layout) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save(out, layout);
}

LoadedRc load_rc(std::istream& in) {
  bin::Reader r(in, "RCM1");
  r.expect_magic("RCM1");
  if (const auto v = r.u32(); v != kRcVersion) r.fail("unsupported version " + std::to_string(v));
  LoadedRc out;
  try {
    out.layout = feature_layout_from_json(nlohmann::json::parse(r.string()));
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad layout: ") + e.what());
  }
  const auto layers = r.u32();
  if (layers != 4) r.fail("expected 4 layers, got " + std::to_string(layers));
  std::size_t expect_in = out.layout.size();
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (cols != expect_in || static_cast<std::uint64_t>(rows) * cols > (1ull << 28))
      r.fail("layer " + std::to_string(l) + " has an unexpected shape");
    out.model.params.weights.push_back(r.f32_block(rows, cols));
    out.model.params.biases.push_back(r.f32_block(rows, 1));
    expect_in = rows;
  }
  if (expect_in != 1) r.fail("output layer must have width 1");
  try {
    const auto meta = nlohmann::json::parse(r.string());
    out.model.config = rc_config_from_json(meta.at("config"));
    out.model.params.dropout = out.model.config.dropout;
    out.model.best_epoch = meta.at("best_epoch").get<int>();
    out.model.validation_scores = meta.at("validation_scores").get<std::vector<double>>();
    for (const auto& e : meta.at("history"))
      out.model.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                   e.at("val_loss").get<double>(), e.at("val_f1").get<double>(),
                                   e.at("val_f2").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad metadata: ") + e.what());
  } catch (const ConfigError& e) {
    r.fail(std::string("bad metadata: ") + e.what());
  }
  return out;
}

LoadedRc load_rc_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return load_rc(in);
}

void write_scores_csv(std::ostream& out, std::span<const CandidatePair> pairs, std::span<const double> scores,
                      RelationLabel relation) {
  if (pairs.size() != scores.size()) throw ShapeError("one score per pair is required");
  out << "doc,pair,score,label\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const bool gold = relation == RelationLabel::Ade ? p.gold_ade : p.gold_indication;
    out << p.doc_id << ',' << p.drug.id << ':' << p.disorder.id << ',' << scores[i] << ',' << (gold ? 1 : 0) << '\n';
  }
}

}  // namespace clinrel
