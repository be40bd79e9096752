#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "clinrel/error.hpp"
#include "clinrel/relclass/relclass.hpp"
#include "oracles.hpp"

using namespace clinrel;

namespace {

const std::vector<std::size_t> kHidden{6, 4, 3};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Straight-line forward pass in eval mode.
double reference_forward(const MlpParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    std::vector<double> z(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      z[r] = p.biases[l](r, 0);
      for (std::size_t c = 0; c < w.cols(); ++c) z[r] += w(r, c) * a[c];
    }
    if (l + 1 == p.weights.size()) return sigmoid(z[0]);
    for (double& v : z) v = std::max(0.0, v);
    a = z;
  }
  return 0.0;
}

MlpParams random_params(std::size_t in, std::uint64_t seed) {
  auto p = MlpParams::initialize(in, kHidden, 0.5, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& b : p.biases)
    for (double& v : b.values()) v = n(rng);
  return p;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("forward pass") {
  auto zero = MlpParams::initialize(5, kHidden, 0.5, 1);
  for (auto& w : zero.weights) w.fill(0.0);
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(mlp_forward(zero, x) == 0.5);

  std::mt19937_64 rng(2);
  const auto p = random_params(5, 3);
  for (int i = 0; i < 10; ++i) {
    const auto v = random_vec(5, rng);
    CHECK(std::abs(mlp_forward(p, v) - reference_forward(p, v)) < 1e-10);
    CHECK(mlp_forward(p, v) == mlp_forward(p, v));
  }
  CHECK(mlp_forward(p, x, true, 9) == mlp_forward(p, x, true, 9));
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("focal loss values") {
  const double p = 0.3;
  CHECK(focal_loss(p, 1, 2.0, 0.25).loss == doctest::Approx(0.25 * 0.49 * -std::log(0.3)).epsilon(1e-12));
  CHECK(focal_loss(p, 1, 0.0, 0.5).loss == doctest::Approx(-0.5 * std::log(0.3)).epsilon(1e-12));
  CHECK(focal_loss(p, 0, 0.0, 0.5).loss == doctest::Approx(-0.5 * std::log(0.7)).epsilon(1e-12));
  CHECK(focal_loss(1.0 - 1e-7, 1, 2.0, 0.25).loss < 1e-15);
  CHECK(focal_loss(1e-7, 0, 2.0, 0.25).loss < 1e-15);
}

TEST_CASE("focal loss logit gradient matches central differences") {
  double worst = 0;
  for (int y : {0, 1})
    for (double gamma : {0.0, 1.0, 2.0})
      for (double z : {-3.0, -0.4, 0.0, 0.8, 2.5}) {
        double zz = z;
        const double fd = oracle::central_difference(zz, [&] { return focal_loss(sigmoid(zz), y, gamma, 0.25).loss; });
        worst = std::max(worst, oracle::relative_error(focal_loss(sigmoid(z), y, gamma, 0.25).dlogit, fd));
      }
  CHECK(worst < 1e-4);
}

TEST_CASE("MLP backpropagation matches central differences") {
  std::mt19937_64 rng(4);
  auto p = random_params(5, 5);
  const auto x = random_vec(5, rng);
  MlpTrace trace;
  const double z = mlp_logit(p, x, nullptr, &trace);
  auto grads = p.zeros_like();
  const auto fl = focal_loss(sigmoid(z), 1, 2.0, 0.25);
  mlp_backward(p, trace, fl.dlogit, grads);

  auto loss = [&] { return focal_loss(sigmoid(mlp_logit(p, x)), 1, 2.0, 0.25).loss; };
  double worst = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (std::size_t i = 0; i < p.weights[l].size(); ++i)
      worst = std::max(worst, oracle::relative_error(grads.weights[l].values()[i],
                                                     oracle::central_difference(p.weights[l].values()[i], loss)));
    for (std::size_t i = 0; i < p.biases[l].size(); ++i)
      worst = std::max(worst, oracle::relative_error(grads.biases[l].values()[i],
                                                     oracle::central_difference(p.biases[l].values()[i], loss)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("scoring and document decisions") {
  std::mt19937_64 rng(6);
  const auto p = random_params(4, 7);
  Matrix x = oracle::random_matrix(5, 4, rng);
  const auto batch = score_pairs(p, x);
  REQUIRE(batch.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(batch[i] == mlp_forward(p, x.row(i)));
  CHECK(score_pairs(p, Matrix(0, 4)).empty());
  CHECK(score_pairs(p, row_slice(x, 0, 1)).size() == 1);

  const auto yes = predict_document(std::vector<double>{0.1, 0.9}, 0.5);
  CHECK(yes.label);
  CHECK(yes.score == 0.9);
  const auto none = predict_document(std::vector<double>{}, 0.5);
  CHECK(!none.label);
  CHECK(none.score == 0.0);
  CHECK(!predict_document(std::vector<double>{0.1, 0.4}, 0.5).label);
}

namespace {

struct Toy {
  Matrix x;
  std::vector<int> y;
};

Toy separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Toy t{oracle::random_matrix(n, 6, rng, 0.5), {}};
  for (std::size_t i = 0; i < n; ++i) {
    t.y.push_back(i % 3 == 0);
    if (t.y.back())
      for (double& v : t.x.row(i)) v += 2.0;
  }
  return t;
}

RcTrainConfig fast_config() {
  RcTrainConfig c;
  c.hidden = {16, 8, 4};
  c.learning_rate = 1e-2;
  c.batch_size = 16;
  c.max_epochs = 50;
  c.patience = 50;
  return c;
}

}  // namespace

TEST_CASE("classifier learns a separable toy set") {
  const Toy tr = separable(120, 1), va = separable(60, 2);
  const auto m = train_rc(tr.x, tr.y, va.x, va.y, fast_config(), 3);
  CHECK(m.history.size() <= 50);
  CHECK(m.history.at(static_cast<std::size_t>(m.best_epoch - 1)).val_f1 == 1.0);
  CHECK(m.validation_scores == score_pairs(m.params, va.x));

  const auto again = train_rc(tr.x, tr.y, va.x, va.y, fast_config(), 3);
  CHECK(again.params == m.params);
  CHECK(again.history == m.history);
}

TEST_CASE("early stopping on a flat validation metric") {
  const Toy tr = separable(60, 4);
  Toy va = separable(20, 5);
  std::fill(va.y.begin(), va.y.end(), 0);  // best F1 stays 0
  auto c = fast_config();
  c.max_epochs = 100;
  c.patience = 20;
  const auto m = train_rc(tr.x, tr.y, va.x, va.y, c, 6);
  CHECK(m.history.size() == 21);
  CHECK(m.best_epoch == 1);
}

TEST_CASE("selection metric picks a recorded checkpoint") {
  const Toy tr = separable(90, 7), va = separable(40, 8);
  for (auto metric : {SelectionMetric::F1, SelectionMetric::F2, SelectionMetric::ValLoss}) {
    auto c = fast_config();
    c.max_epochs = 8;
    c.selection_metric = metric;
    const auto m = train_rc(tr.x, tr.y, va.x, va.y, c, 9);
    REQUIRE(m.best_epoch >= 1);
    const auto& h = m.history;
    for (const auto& e : h) {
      if (metric == SelectionMetric::F1) CHECK(e.val_f1 <= h[m.best_epoch - 1].val_f1);
      if (metric == SelectionMetric::F2) CHECK(e.val_f2 <= h[m.best_epoch - 1].val_f2);
      if (metric == SelectionMetric::ValLoss) CHECK(e.val_loss >= h[m.best_epoch - 1].val_loss);
    }
  }
}

TEST_CASE("classifier files round trip with their layout") {
  const Toy tr = separable(30, 10), va = separable(15, 11);
  auto c = fast_config();
  c.max_epochs = 2;
  const auto layout = FeatureLayout::bilstm(1, 2, 1);
  REQUIRE(layout.size() == 4 * 1 + 4 * 2 + 2 * 1);
  Matrix x(tr.x.rows(), layout.size()), vx(va.x.rows(), layout.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < 6; ++j) x(r, j) = tr.x(r, j);
  for (std::size_t r = 0; r < vx.rows(); ++r)
    for (std::size_t j = 0; j < 6; ++j) vx(r, j) = va.x(r, j);
  const auto m = train_rc(x, tr.y, vx, va.y, c, 12);
  std::stringstream buf;
  m.save(buf, layout);
  const auto back = load_rc(buf);
  CHECK(back.layout == layout);
  CHECK(back.model.history == m.history);
  // weights are stored as float32
  const auto a = score_pairs(m.params, vx), b = score_pairs(back.model.params, vx);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-5);

  CHECK_THROWS_AS(m.save(buf, FeatureLayout::bilstm(2, 2, 1)), ShapeError);
  std::stringstream junk("RCMX");
  CHECK_THROWS_AS(load_rc(junk), ParseError);
}

TEST_CASE("classifier config parsing is strict") {
  CHECK(rc_config_from_json(nlohmann::json{{"dropout", 0.3}}).dropout == 0.3);
  CHECK_THROWS_AS(rc_config_from_json(nlohmann::json{{"droput", 0.3}}), ConfigError);
  CHECK_THROWS_AS(rc_config_from_json(nlohmann::json{{"hidden", {4, 4}}}), ConfigError);
  const RcTrainConfig d;
  CHECK(d.hidden == std::vector<std::size_t>{512, 128, 32});
  CHECK(d.dropout == 0.5);
  CHECK(d.learning_rate == 1e-6);
  CHECK(d.focal_gamma == 2.0);
  CHECK(d.focal_alpha == 0.25);
}
