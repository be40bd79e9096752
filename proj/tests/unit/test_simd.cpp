#include <doctest.h>

#include <random>
#include <vector>

#include "clinrel/simd/kernels.hpp"
#include "oracles.hpp"

using namespace clinrel;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Reassociated sums differ from the scalar order only by rounding.
void close(double a, double b) { CHECK(oracle::relative_error(a, b, 1.0) < 1e-12); }

}  // namespace

TEST_CASE("scalar kernels match a naive loop") {
  std::mt19937_64 rng(3);
  const auto& k = simd::scalar_kernels();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u}) {
    auto a = random_vec(n, rng), b = random_vec(n, rng);
    double dot = 0, d2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += a[i] * b[i];
      d2 += (a[i] - b[i]) * (a[i] - b[i]);
    }
    close(k.dot(a.data(), b.data(), n), dot);
    close(k.squared_distance(a.data(), b.data(), n), d2);
  }
}

TEST_CASE("avx2 kernels agree with scalar kernels") {
  const auto* fast = simd::avx2_kernels();
  if (!fast) {
    MESSAGE("AVX2 kernels unavailable on this machine; nothing to compare");
    return;
  }
  const auto& ref = simd::scalar_kernels();
  std::mt19937_64 rng(11);
  for (std::size_t n = 0; n <= 41; ++n) {
    auto a = random_vec(n, rng), b = random_vec(n, rng);
    close(fast->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n));
    close(fast->squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n));

    auto y1 = b, y2 = b;
    fast->axpy(0.37, a.data(), y1.data(), n);
    ref.axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) close(y1[i], y2[i]);

    for (std::size_t rows : {1u, 5u}) {
      auto w = random_vec(rows * n, rng);
      std::vector<double> g1(rows), g2(rows);
      fast->gemv(w.data(), rows, n, a.data(), g1.data());
      ref.gemv(w.data(), rows, n, a.data(), g2.data());
      for (std::size_t r = 0; r < rows; ++r) close(g1[r], g2[r]);
    }
  }
}

TEST_CASE("dispatch picks a kernel table and wrappers check sizes") {
  const auto& active = simd::active_kernels();
  CHECK(!active.name.empty());
  std::vector<double> a{1, 2, 3}, b{4, 5};
  CHECK_THROWS_AS(simd::dot(a, b), ShapeError);
  Matrix w(2, 3);
  w(0, 0) = 1;
  w(1, 2) = 2;
  std::vector<double> y(2);
  simd::gemv(w, a, y);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 6.0);
}
