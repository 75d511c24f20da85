#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "cln/errors.hpp"
#include "cln/rng.hpp"
#include "cln/scores.hpp"

using namespace cln;

namespace {

Eigen::MatrixXd one_row(std::initializer_list<double> values) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(values.size()));
  int j = 0;
  for (double v : values) m(0, j++) = v;
  return m;
}

Eigen::MatrixXd random_prob_rows(int n, int K, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  Eigen::MatrixXd probs(n, K);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      probs(i, k) = unif(rng);
      sum += probs(i, k);
    }
    probs.row(i) /= sum;
  }
  return probs;
}

}  // namespace

TEST_CASE("homogeneous scores") {
  Rng rng = make_rng(1, 0, "test");
  SUBCASE("s = 1 - pi without jitter") {
    const auto s = hps_scores(one_row({0.7, 0.3}), 0.0, rng);
    CHECK(s.s(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(s.s(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("degenerate probability row") {
    const auto s = hps_scores(one_row({1.0, 0.0}), 0.0, rng);
    CHECK(s.s(0, 0) == 0.0);
    CHECK(s.s(0, 1) == 1.0);
  }
  SUBCASE("jitter stays within its amplitude and separates ties") {
    const auto s = hps_scores(one_row({0.5, 0.5}), 1e-6, rng);
    CHECK(std::abs(s.s(0, 0) - 0.5) <= 1e-6);
    CHECK(std::abs(s.s(0, 1) - 0.5) <= 1e-6);
    CHECK(s.s(0, 0) != s.s(0, 1));
  }
  SUBCASE("invalid rows are rejected") {
    Eigen::MatrixXd bad = one_row({0.7, 0.7});
    CHECK_THROWS_AS(hps_scores(bad, 0.0, rng), InvalidProbabilities);
  }
}

TEST_CASE("generalized inverse quantile scores") {
  Rng rng = make_rng(2, 0, "test");
  SUBCASE("sorted cumulative sums") {
    const auto s = aps_scores(one_row({0.6, 0.3, 0.1}), false, rng);
    CHECK(s.s(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(s.s(0, 1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.s(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("uniform row resolves ties by label index") {
    const int K = 4;
    const auto s = aps_scores(
        Eigen::MatrixXd::Constant(1, K, 1.0 / K), false, rng);
    for (int k = 0; k < K; ++k) {
      CHECK(s.s(0, k) == doctest::Approx((k + 1.0) / K).epsilon(1e-12));
    }
  }
  SUBCASE("randomized scores live in [Pi - pi, Pi]") {
    const Eigen::MatrixXd probs = random_prob_rows(200, 5, rng);
    const auto det = aps_scores(probs, false, rng);
    Rng rng2 = make_rng(2, 1, "test");
    const auto rnd = aps_scores(probs, true, rng2);
    for (int i = 0; i < probs.rows(); ++i) {
      for (int k = 0; k < 5; ++k) {
        CHECK(rnd.s(i, k) <= det.s(i, k) + 1e-12);
        CHECK(rnd.s(i, k) >= det.s(i, k) - probs(i, k) - 1e-12);
      }
    }
  }
  SUBCASE("deterministic scores are nondecreasing along the ranking") {
    const Eigen::MatrixXd probs = random_prob_rows(100, 6, rng);
    const auto s = aps_scores(probs, false, rng);
    for (int i = 0; i < probs.rows(); ++i) {
      std::vector<int> order(6);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return probs(i, a) > probs(i, b);
      });
      for (int r = 1; r < 6; ++r) {
        CHECK(s.s(i, order[r - 1]) <= s.s(i, order[r]) + 1e-12);
      }
    }
  }
}

TEST_CASE("prediction sets") {
  SUBCASE("tau = 1 admits every label") {
    Eigen::VectorXd row(3);
    row << 0.2, 0.9, 1.0;
    const auto set = prediction_set(row, Thresholds::uniform(3, 1.0));
    CHECK(set == std::vector<int>{0, 1, 2});
  }
  SUBCASE("tau = 0 with positive scores is empty") {
    Eigen::VectorXd row(3);
    row << 0.2, 0.9, 0.4;
    CHECK(prediction_set(row, Thresholds::uniform(3, 0.0)).empty());
  }
  SUBCASE("direct comparison") {
    Eigen::VectorXd row(2);
    row << 0.3, 0.7;
    Eigen::VectorXd tau(2);
    tau << 0.5, 0.5;
    CHECK(prediction_set(row, Thresholds(tau)) == std::vector<int>{0});
  }
  SUBCASE("dimension mismatch") {
    Eigen::VectorXd row(2);
    row << 0.3, 0.7;
    CHECK_THROWS_AS(prediction_set(row, Thresholds::uniform(3, 0.5)),
                    DimensionMismatch);
  }
}

// Prediction-function axioms: membership of k is monotone in tau_k, depends
// only on tau_k, and tau_k = 1 always admits k. Plus the score/threshold
// duality that defines the scores.
TEST_CASE("prediction function axioms on random rows") {
  Rng rng = make_rng(5, 0, "test");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int K = 5;
  const Eigen::MatrixXd probs = random_prob_rows(50, K, rng);
  const auto scores = aps_scores(probs, false, rng);
  for (int i = 0; i < probs.rows(); ++i) {
    const Eigen::VectorXd row = scores.s.row(i);
    Eigen::VectorXd tau(K);
    for (int k = 0; k < K; ++k) tau(k) = unif(rng);
    const auto base = prediction_set(row, Thresholds(tau));
    for (int k = 0; k < K; ++k) {
      const bool in_base =
          std::find(base.begin(), base.end(), k) != base.end();
      CHECK(in_base == (row[k] <= tau[k]));

      // Raising tau_k never removes k.
      Eigen::VectorXd raised = tau;
      raised[k] = std::min(1.0, tau[k] + unif(rng));
      const auto raised_set = prediction_set(row, Thresholds(raised));
      if (in_base) {
        CHECK(std::find(raised_set.begin(), raised_set.end(), k) !=
              raised_set.end());
      }

      // Changing tau_j for j != k leaves k's membership alone.
      Eigen::VectorXd flipped = tau;
      flipped[(k + 1) % K] = unif(rng);
      const auto flipped_set = prediction_set(row, Thresholds(flipped));
      CHECK((std::find(flipped_set.begin(), flipped_set.end(), k) !=
             flipped_set.end()) == in_base);

      // tau_k = 1 admits k.
      Eigen::VectorXd admit = tau;
      admit[k] = 1.0;
      const auto admit_set = prediction_set(row, Thresholds(admit));
      CHECK(std::find(admit_set.begin(), admit_set.end(), k) !=
            admit_set.end());
    }
  }
}
