#include <doctest.h>

#include <random>

#include "clinrel/tagger/bilstm.hpp"
#include "oracles.hpp"

using namespace clinrel;

namespace {

double weighted_sum(const Matrix& out, const Matrix& r) {
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * r.values()[i];
  return s;
}

}  // namespace

TEST_CASE("output shape and zero-weight behaviour") {
  BiLstmParams p(6, 4, 1);
  CHECK(bilstm_forward(p, Matrix(1, 6)).rows() == 1);
  CHECK(bilstm_forward(p, Matrix(1, 6)).cols() == 8);
  const Matrix out = bilstm_forward(p, Matrix(3, 6));
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("forget gate bias starts at one") {
  BiLstmParams p(3, 2, 1);
  std::mt19937_64 rng(1);
  p.initialize(rng);
  // gate order i f g o
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(p.forward(0).b(2 + j, 0) == 1.0);
    CHECK(p.forward(0).b(j, 0) == 0.0);
  }
}

TEST_CASE("reversing the input swaps the two directions") {
  std::mt19937_64 rng(2);
  BiLstmParams p(5, 3, 1);
  p.initialize(rng);
  p.backward(0) = p.forward(0);
  const Matrix x = oracle::random_matrix(3, 5, rng);
  Matrix rev(3, 5);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 5; ++j) rev(t, j) = x(2 - t, j);
  const Matrix a = bilstm_forward(p, x), b = bilstm_forward(p, rev);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(b(t, j) == doctest::Approx(a(2 - t, 3 + j)).epsilon(1e-14));
      CHECK(b(t, 3 + j) == doctest::Approx(a(2 - t, j)).epsilon(1e-14));
    }
}

TEST_CASE("backpropagation matches central differences") {
  std::mt19937_64 rng(3);
  BiLstmParams p(4, 3, 2);
  p.initialize(rng);
  Matrix x = oracle::random_matrix(4, 4, rng);
  const Matrix r = oracle::random_matrix(4, 6, rng);

  BiLstmCache cache;
  const Matrix out = bilstm_forward(p, x, &cache);
  auto grads = p.zeros_like();
  const Matrix dx = bilstm_backward(p, cache, r, grads, true);

  auto loss = [&] { return weighted_sum(bilstm_forward(p, x), r); };
  double worst = 0;
  std::vector<std::pair<std::string, Matrix*>> tensors;
  p.for_each_tensor([&](const std::string& n, Matrix& m) { tensors.emplace_back(n, &m); });
  std::vector<const Matrix*> gtensors;
  grads.for_each_tensor([&](const std::string&, const Matrix& m) { gtensors.push_back(&m); });
  REQUIRE(tensors.size() == gtensors.size());
  for (std::size_t k = 0; k < tensors.size(); ++k)
    for (std::size_t i = 0; i < tensors[k].second->size(); ++i)
      worst = std::max(worst, oracle::relative_error(gtensors[k]->values()[i],
                                                     oracle::central_difference(tensors[k].second->values()[i], loss)));
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, oracle::relative_error(dx.values()[i], oracle::central_difference(x.values()[i], loss)));
  CHECK(worst < 1e-3);
  CHECK(out.cols() == 6);
}
