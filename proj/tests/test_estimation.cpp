#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cln/contamination.hpp"
#include "cln/errors.hpp"
#include "cln/estimation.hpp"
#include "cln/rng.hpp"

using namespace cln;

namespace {

// Degenerate one-hot probabilities that make argmax(probs) equal the given
// prediction for each sample.
Eigen::MatrixXd probs_for_predictions(const std::vector<int>& pred, int K) {
  Eigen::MatrixXd probs =
      Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(pred.size()), K,
                                0.01);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    probs(static_cast<Eigen::Index>(i), pred[i]) = 1.0 - 0.01 * (K - 1);
  }
  return probs;
}

// A synthetic classifier of accuracy `acc` whose mistakes rotate one label up.
std::vector<int> noisy_predictions(const std::vector<int>& y, double acc,
                                   int K, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> pred(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    pred[i] = unif(rng) < acc ? y[i] : (y[i] + 1) % K;
  }
  return pred;
}

std::vector<int> cyclic_labels(int n, int K) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % K;
  return y;
}

}  // namespace

TEST_CASE("the estimating identity Q_tilde = M Q on random models") {
  Rng rng = make_rng(61, 0, "t");
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 2 + trial % 4;
    // Random contamination model and random row-stochastic confusion Q.
    Eigen::MatrixXd T(K, K);
    for (int l = 0; l < K; ++l) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        T(k, l) = unif(rng) + (k == l ? 3.0 : 0.0);
        sum += T(k, l);
      }
      T.col(l) /= sum;
    }
    Eigen::VectorXd rho(K);
    double rho_sum = 0.0;
    for (int k = 0; k < K; ++k) {
      rho[k] = unif(rng);
      rho_sum += rho[k];
    }
    rho /= rho_sum;
    const auto model = build_from_transition(T, rho);
    Eigen::MatrixXd Q(K, K);
    for (int l = 0; l < K; ++l) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        Q(l, k) = unif(rng);
        sum += Q(l, k);
      }
      Q.row(l) /= sum;
    }
    // Population accuracy matrix on noisy labels, accumulated element-wise:
    // Q_tilde(l,k) = sum_s P[Y=s | noisy=l] Q(s,k).
    Eigen::MatrixXd Q_tilde_pop = Eigen::MatrixXd::Zero(K, K);
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int s = 0; s < K; ++s) acc += model.M(l, s) * Q(s, k);
        Q_tilde_pop(l, k) = acc;
      }
    }
    const Eigen::MatrixXd product = model.M * Q;
    CHECK((Q_tilde_pop - product).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("two-level forward system and its closed-form inversion") {
  const int K = 4;
  const double eps = 0.2, nu = 0.5, psi = 0.9, phi = 0.95;
  const double psi_tilde = (1 - eps) * psi + eps / K + eps * nu / K * (2 * phi - 1);
  const double phi_tilde = phi - eps * (1 - nu) * (phi - 0.5);
  CHECK(psi_tilde == doctest::Approx(0.7925).epsilon(1e-15));
  CHECK(phi_tilde == doctest::Approx(0.905).epsilon(1e-15));
  const auto [eps_hat, nu_hat] =
      invert_two_level_system(psi, psi_tilde, phi, phi_tilde, K);
  CHECK(std::abs(eps_hat - eps) <= 1e-12);
  CHECK(std::abs(nu_hat - nu) <= 1e-12);
}

TEST_CASE("two-level inversion edge cases") {
  SUBCASE("phi == phi_tilde forces nu = 1") {
    const auto [eps_hat, nu_hat] =
        invert_two_level_system(0.9, 0.8, 0.95, 0.95, 4);
    CHECK(nu_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eps_hat > 0.0);
  }
  SUBCASE("degenerate denominators are rejected") {
    // (K/2) psi = phi
    CHECK_THROWS_AS(invert_two_level_system(0.475, 0.4, 0.95, 0.9, 4),
                    DegenerateDenominator);
    CHECK_THROWS_AS(invert_two_level_system(0.9, 0.8, 0.5, 0.45, 4),
                    DegenerateDenominator);
  }
}

TEST_CASE("randomized response fit arithmetic") {
  const int K = 2;
  // 100 clean samples with accuracy 0.9, 100 noisy samples with accuracy 0.82.
  std::vector<int> clean_y = cyclic_labels(100, K);
  std::vector<int> clean_pred = clean_y;
  for (int i = 0; i < 10; ++i) clean_pred[static_cast<std::size_t>(i)] ^= 1;
  std::vector<int> noisy_y = cyclic_labels(100, K);
  std::vector<int> noisy_pred = noisy_y;
  for (int i = 0; i < 18; ++i) noisy_pred[static_cast<std::size_t>(i)] ^= 1;
  Rng rng = make_rng(62, 0, "t");
  const auto fit =
      fit_rr(probs_for_predictions(clean_pred, K), clean_y,
             probs_for_predictions(noisy_pred, K), noisy_y, K, 0.01, 200,
             0.5, rng);
  CHECK(fit.psi == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(fit.psi_tilde == doctest::Approx(0.82).epsilon(1e-12));
  CHECK(fit.eps_hat == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fit.eps_low <= fit.eps_hat);
  CHECK(fit.eps_upp >= fit.eps_hat);
  fit.region.validate();
}

TEST_CASE("no observable degradation means eps = 0") {
  const int K = 2;
  const auto y = cyclic_labels(200, K);
  std::vector<int> pred = y;
  for (int i = 0; i < 20; ++i) pred[static_cast<std::size_t>(i)] ^= 1;
  Rng rng = make_rng(63, 0, "t");
  const auto fit = fit_rr(probs_for_predictions(pred, K), y,
                          probs_for_predictions(pred, K), y, K, 0.01, 100,
                          0.5, rng);
  CHECK(fit.eps_hat == 0.0);
}

TEST_CASE("a classifier at chance level cannot identify epsilon") {
  const int K = 2;
  const auto y = cyclic_labels(100, K);
  std::vector<int> pred(100, 0);  // 50% accuracy on cyclic labels
  Rng rng = make_rng(64, 0, "t");
  CHECK_THROWS_AS(fit_rr(probs_for_predictions(pred, K), y,
                         probs_for_predictions(pred, K), y, K, 0.01, 10, 0.5,
                         rng),
                  ClassifierAtChance);
}

TEST_CASE("randomized response fit recovers epsilon from simulation") {
  const int K = 4;
  const double eps = 0.2;
  const auto model = build_rr_uniform(K, eps);
  Rng rng = make_rng(65, 0, "t");
  int good = 0;
  const int reps = 12;
  for (int rep = 0; rep < reps; ++rep) {
    const auto clean_y = cyclic_labels(10000, K);
    const auto clean_pred = noisy_predictions(clean_y, 0.85, K, rng);
    auto noisy_y_clean = cyclic_labels(50000, K);
    const auto noisy_pred = noisy_predictions(noisy_y_clean, 0.85, K, rng);
    const auto noisy_y = corrupt_labels(noisy_y_clean, model, rng);
    const auto fit = fit_rr(probs_for_predictions(clean_pred, K), clean_y,
                            probs_for_predictions(noisy_pred, K), noisy_y, K,
                            0.01, 200, 0.4, rng);
    if (std::abs(fit.eps_hat - eps) <= 0.02) ++good;
  }
  CHECK(good >= reps - 2);
}

TEST_CASE("two-level fit nests the randomized response fit") {
  const int K = 4;
  const double eps = 0.15;
  const auto model = build_rr_uniform(K, eps);  // nu = 0 data
  Rng rng = make_rng(66, 0, "t");
  const auto clean_y = cyclic_labels(20000, K);
  const auto clean_pred = noisy_predictions(clean_y, 0.9, K, rng);
  auto noisy_clean = cyclic_labels(100000, K);
  const auto noisy_pred = noisy_predictions(noisy_clean, 0.9, K, rng);
  const auto noisy_y = corrupt_labels(noisy_clean, model, rng);
  Rng rng_a = make_rng(67, 0, "t");
  Rng rng_b = make_rng(67, 0, "t");
  const auto two = fit_two_level_rr(probs_for_predictions(clean_pred, K),
                                    clean_y, probs_for_predictions(noisy_pred, K),
                                    noisy_y, K, 0.02, 300, 0.4, rng_a);
  const auto one = fit_rr(probs_for_predictions(clean_pred, K), clean_y,
                          probs_for_predictions(noisy_pred, K), noisy_y, K,
                          0.02, 300, 0.4, rng_b);
  CHECK(two.nu_hat <= 0.25);
  CHECK(std::abs(two.eps_hat - one.eps_hat) <= 0.03);
  two.region.validate();
}

TEST_CASE("general fit with a perfect classifier") {
  const int K = 3;
  const auto model = build_rr_uniform(K, 0.15);
  Rng rng = make_rng(68, 0, "t");
  SUBCASE("no noise and perfect predictions give V = I") {
    const auto y0 = cyclic_labels(3000, K);
    const auto y1 = cyclic_labels(30000, K);
    const auto fit = fit_general(probs_for_predictions(y0, K), y0,
                                 probs_for_predictions(y1, K), y1, K, 0.01,
                                 100, rng);
    CHECK((fit.V_hat - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() <=
          1e-12);
  }
  SUBCASE("with noise, V_hat approaches M^{-1} as the noisy sample grows") {
    const auto y0 = cyclic_labels(5000, K);
    auto y1_clean = cyclic_labels(200000, K);
    const auto y1 = corrupt_labels(y1_clean, model, rng);
    // Perfect classifier: predictions equal the clean labels everywhere.
    const auto fit = fit_general(probs_for_predictions(y0, K), y0,
                                 probs_for_predictions(y1_clean, K), y1, K,
                                 0.01, 100, rng);
    CHECK((fit.Q - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((fit.V_hat - model.V).cwiseAbs().maxCoeff() <= 0.05);
  }
}

TEST_CASE("general fit validation") {
  const int K = 2;
  Rng rng = make_rng(69, 0, "t");
  SUBCASE("a missing clean class is rejected") {
    const std::vector<int> y0(50, 0);
    const auto y1 = cyclic_labels(100, K);
    CHECK_THROWS_AS(fit_general(probs_for_predictions(y0, K), y0,
                                probs_for_predictions(y1, K), y1, K, 0.01, 10,
                                rng),
                    EmptyCleanClass);
  }
  SUBCASE("a constant classifier makes Q_tilde singular") {
    const auto y0 = cyclic_labels(100, K);
    const auto y1 = cyclic_labels(100, K);
    const std::vector<int> pred(100, 1);
    CHECK_THROWS_AS(fit_general(probs_for_predictions(y0, K), y0,
                                probs_for_predictions(pred, K), y1, K, 0.01,
                                10, rng),
                    SingularQtilde);
  }
  SUBCASE("odd K cannot use the two-level fit") {
    const auto y = cyclic_labels(90, 3);
    CHECK_THROWS_AS(fit_two_level_rr(probs_for_predictions(y, 3), y,
                                     probs_for_predictions(y, 3), y, 3, 0.01,
                                     10, 0.3, rng),
                    OddK);
  }
}

TEST_CASE("interval widths shrink as the clean sample grows") {
  const int K = 4;
  const double eps = 0.15;
  const auto model = build_rr_uniform(K, eps);
  Rng rng = make_rng(70, 0, "t");
  std::vector<double> median_widths;
  for (int n0 : {100, 1000, 10000}) {
    std::vector<double> widths;
    for (int rep = 0; rep < 11; ++rep) {
      const auto clean_y = cyclic_labels(n0, K);
      const auto clean_pred = noisy_predictions(clean_y, 0.85, K, rng);
      auto noisy_clean = cyclic_labels(50000, K);
      const auto noisy_pred = noisy_predictions(noisy_clean, 0.85, K, rng);
      const auto noisy_y = corrupt_labels(noisy_clean, model, rng);
      const auto fit = fit_rr(probs_for_predictions(clean_pred, K), clean_y,
                              probs_for_predictions(noisy_pred, K), noisy_y,
                              K, 0.01, 200, 0.5, rng);
      widths.push_back(fit.eps_upp - fit.eps_low);
    }
    std::sort(widths.begin(), widths.end());
    median_widths.push_back(widths[5]);
  }
  CHECK(median_widths[1] < median_widths[0]);
  CHECK(median_widths[2] < median_widths[1]);
}

TEST_CASE("clamping stays inactive for interior parameters at n0 = 10000") {
  const int K = 4;
  const auto model = build_rr_uniform(K, 0.1);
  Rng rng = make_rng(71, 0, "t");
  int clamped = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto clean_y = cyclic_labels(10000, K);
    const auto clean_pred = noisy_predictions(clean_y, 0.85, K, rng);
    auto noisy_clean = cyclic_labels(50000, K);
    const auto noisy_pred = noisy_predictions(noisy_clean, 0.85, K, rng);
    const auto noisy_y = corrupt_labels(noisy_clean, model, rng);
    const auto fit = fit_rr(probs_for_predictions(clean_pred, K), clean_y,
                            probs_for_predictions(noisy_pred, K), noisy_y, K,
                            0.01, 200, 0.25, rng);
    if (fit.eps_hat == 0.0 || fit.eps_hat == 0.25) ++clamped;
  }
  CHECK(clamped == 0);
}

TEST_CASE("epsilon from an observed mismatch rate") {
  const std::vector<int> y = {0, 1, 2, 3, 0, 1, 2, 3, 0, 1};
  std::vector<int> y_tilde = y;
  y_tilde[0] = 1;
  y_tilde[5] = 2;
  y_tilde[9] = 0;
  // 3 mismatches out of 10 with K = 4: eps = 0.3 / 0.75.
  CHECK(epsilon_from_mismatch_rate(y, y_tilde, 4) ==
        doctest::Approx(0.4).epsilon(1e-12));
}
