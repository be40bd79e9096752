#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "clinrel/balance/balance.hpp"
#include "clinrel/error.hpp"
#include "oracles.hpp"

using namespace clinrel;

namespace {

std::pair<Matrix, std::vector<int>> labelled(std::size_t pos, std::size_t neg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x = oracle::random_matrix(pos + neg, 3, rng);
  std::vector<int> y(pos + neg, 0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(pos), 1);
  return {x, y};
}

std::size_t count(const std::vector<int>& y, int v) { return static_cast<std::size_t>(std::count(y.begin(), y.end(), v)); }

}  // namespace

TEST_CASE("SMOTE points are convex combinations of neighbours") {
  Matrix line(2, 1);
  line(1, 0) = 1.0;
  const Matrix s = smote_synthesize(line, 1, 3, 5);
  REQUIRE(s.rows() == 3);
  for (double v : s.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(smote_synthesize(line, 1, 0, 5).rows() == 0);

  std::mt19937_64 rng(12);
  const Matrix pts = oracle::random_matrix(10, 4, rng);
  const Matrix syn = smote_synthesize(pts, 3, 20, 77);
  REQUIRE(syn.rows() == 20);
  for (std::size_t i = 0; i < syn.rows(); ++i) CHECK(oracle::on_knn_segment(syn.row(i), pts, 3));

  CHECK(smote_synthesize(pts, 3, 20, 77) == syn);
  CHECK_THROWS_AS(smote_synthesize(Matrix(1, 4), 1, 3, 1), InsufficientMinorityError);
  CHECK_THROWS_AS(smote_synthesize(pts, 10, 3, 1), ConfigError);
}

TEST_CASE("undersampling") {
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < 100; ++i) idx[i] = 1000 + i;
  const auto s = undersample(idx, 40, 3);
  CHECK(std::set(s.begin(), s.end()).size() == 40);
  CHECK(undersample(idx, 100, 3) == idx);
  CHECK(undersample(idx, 40, 3) == s);
  CHECK_THROWS_AS(undersample(idx, 101, 3), SizingError);
}

TEST_CASE("rebalance arithmetic") {
  auto [x, y] = labelled(5, 1000, 1);
  RebalanceConfig cfg{0.4, 3, 4, 9};
  const auto out = rebalance(x, y, cfg);
  CHECK(count(out.labels, 1) == 20);
  CHECK(count(out.labels, 0) == 50);
  CHECK(out.features.rows() == 70);
  const auto again = rebalance(x, y, cfg);
  CHECK(again.features == out.features);
  CHECK(again.labels == out.labels);

  auto [x2, y2] = labelled(5, 6, 2);
  const auto capped = rebalance(x2, y2, cfg);
  CHECK(count(capped.labels, 1) == 20);
  CHECK(count(capped.labels, 0) == 6);

  auto [x3, y3] = labelled(5, 30, 3);
  const auto even = rebalance(x3, y3, {1.0, 3, 1, 4});
  CHECK(count(even.labels, 1) == 5);
  CHECK(count(even.labels, 0) == 5);

  // every original positive survives
  std::size_t kept = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t r = 0; r < out.features.rows(); ++r)
      if (out.labels[r] == 1 && std::equal(x.row(i).begin(), x.row(i).end(), out.features.row(r).begin())) {
        ++kept;
        break;
      }
  CHECK(kept == 5);

  auto [x4, y4] = labelled(0, 10, 4);
  CHECK_THROWS_AS(rebalance(x4, y4, cfg), ClassMissingError);
}
