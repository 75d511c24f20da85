#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "cln/bounds.hpp"
#include "cln/calibration.hpp"
#include "cln/contamination.hpp"
#include "cln/errors.hpp"
#include "cln/scores.hpp"
#include "cln/synth.hpp"

using namespace cln;

namespace {

// Scores drawn directly from per-(label, column) uniform distributions.
// Keeps calibration tests independent of the generators and classifiers.
ScoreMatrix synthetic_scores(const std::vector<int>& labels, int K, Rng& rng,
                             double spread = 1.0) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ScoreMatrix s;
  s.s.resize(static_cast<Eigen::Index>(labels.size()), K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int k = 0; k < K; ++k) {
      // Matching labels get stochastically smaller scores.
      const double base = labels[i] == k ? 0.0 : (1.0 - spread) * 0.2;
      s.s(static_cast<Eigen::Index>(i), k) =
          std::clamp(base + unif(rng) * (labels[i] == k ? 0.6 : 1.0), 0.0, 1.0);
    }
  }
  return s;
}

std::vector<int> cyclic_labels(int n, int K) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % K;
  return y;
}

ScoreMatrix from_column(const std::vector<double>& col) {
  ScoreMatrix s;
  s.s.resize(static_cast<Eigen::Index>(col.size()), 1);
  for (std::size_t i = 0; i < col.size(); ++i) {
    s.s(static_cast<Eigen::Index>(i), 0) = col[i];
  }
  return s;
}

}  // namespace

TEST_CASE("monte carlo c(n)") {
  SUBCASE("c(1) is E[1 - U] = 1/2") {
    Rng rng = make_rng(10, 0, "c");
    CHECK(monte_carlo_c(1, 1000000, rng) == doctest::Approx(0.5).epsilon(0.01));
  }
  SUBCASE("c(100) sits in the sqrt-n bracket") {
    Rng rng = make_rng(11, 0, "c");
    const double c = monte_carlo_c(100, 100000, rng);
    CHECK(c >= 0.03);
    CHECK(c <= 0.10);
  }
  SUBCASE("single replicate is reproducible from the seed") {
    Rng a = make_rng(12, 0, "c");
    Rng b = make_rng(12, 0, "c");
    CHECK(monte_carlo_c(50, 1, a) == monte_carlo_c(50, 1, b));
  }
  SUBCASE("the cache returns a stable value under concurrent access") {
    CTable table(2000);
    std::vector<double> results(8);
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t) {
      pool.emplace_back([&, t]() { results[static_cast<std::size_t>(t)] = table.c(123); });
    }
    for (auto& t : pool) t.join();
    for (int t = 1; t < 8; ++t) CHECK(results[static_cast<std::size_t>(t)] == results[0]);
  }
}

TEST_CASE("standard label-conditional thresholds") {
  SUBCASE("ceil((1+n)(1-alpha))-th order statistic") {
    const std::vector<double> col = {0.1, 0.2, 0.3, 0.4, 0.5,
                                     0.6, 0.7, 0.8, 0.9};
    const auto tau = standard_label_conditional(from_column(col),
                                                std::vector<int>(9, 0), 0.1);
    CHECK(tau.tau[0] == 0.9);
  }
  SUBCASE("small class") {
    const auto tau = standard_label_conditional(
        from_column({0.2, 0.4, 0.6, 0.8}), std::vector<int>(4, 0), 0.5);
    CHECK(tau.tau[0] == 0.6);
  }
  SUBCASE("index overflow yields tau = 1") {
    const auto tau = standard_label_conditional(
        from_column({0.2, 0.4, 0.6}), std::vector<int>(3, 0), 0.01);
    CHECK(tau.tau[0] == 1.0);
  }
  SUBCASE("an empty class is an error") {
    Rng rng = make_rng(1, 0, "t");
    const auto scores = synthetic_scores(cyclic_labels(10, 2), 2, rng);
    std::vector<int> y(10, 0);  // label 1 never appears
    CHECK_THROWS_AS(standard_label_conditional(scores, y, 0.1),
                    EmptyLabelClass);
  }
}

TEST_CASE("standard marginal threshold") {
  SUBCASE("pooled rule") {
    Rng rng = make_rng(2, 0, "t");
    std::vector<double> col(9);
    for (int i = 0; i < 9; ++i) col[static_cast<std::size_t>(i)] = 0.1 * (i + 1);
    CHECK(standard_marginal(from_column(col), std::vector<int>(9, 0), 0.1) ==
          0.9);
    CHECK(standard_marginal(from_column({0.2, 0.4, 0.6, 0.8}),
                            std::vector<int>(4, 0), 0.5) == 0.6);
    CHECK(standard_marginal(from_column({0.2, 0.4, 0.6}),
                            std::vector<int>(3, 0), 0.01) == 1.0);
  }
  SUBCASE("empty calibration is an error") {
    ScoreMatrix empty;
    empty.s.resize(0, 2);
    CHECK_THROWS_AS(standard_marginal(empty, {}, 0.1), EmptyCalibration);
  }
}

TEST_CASE("empirical inflation factor") {
  // Group 0: 10 samples whose column-0 scores put F_0^0(0.5) = 0.8.
  // Group 1: 10 samples whose column-0 scores put F_1^0(0.5) = 0.4.
  ScoreMatrix s;
  s.s.resize(20, 2);
  std::vector<int> y(20);
  for (int i = 0; i < 10; ++i) {
    y[static_cast<std::size_t>(i)] = 0;
    s.s(i, 0) = i < 8 ? 0.04 * (i + 1) : 0.6 + 0.01 * i;
    s.s(i, 1) = 0.5;
  }
  for (int i = 10; i < 20; ++i) {
    y[static_cast<std::size_t>(i)] = 1;
    s.s(i, 0) = i < 14 ? 0.05 * (i - 9) : 0.7 + 0.01 * i;
    s.s(i, 1) = 0.5;
  }
  EcdfFamily ecdf(s, y, 2);
  REQUIRE(ecdf.F(0, 0, 0.5) == doctest::Approx(0.8));
  REQUIRE(ecdf.F(1, 0, 0.5) == doctest::Approx(0.4));

  SUBCASE("identity V gives zero inflation") {
    CHECK(empirical_inflation(ecdf, Eigen::MatrixXd::Identity(2, 2), 0, 0.5) ==
          0.0);
  }
  SUBCASE("worked 2x2 example") {
    Eigen::MatrixXd V(2, 2);
    V << 1.125, -0.125, -0.125, 1.125;
    CHECK(empirical_inflation(ecdf, V, 0, 0.5) ==
          doctest::Approx(0.125 * 0.8 - 0.125 * 0.4).epsilon(1e-12));
  }
  SUBCASE("beyond the largest score the row sum cancels everything") {
    const auto model = build_rr_uniform(2, 0.2);
    CHECK(std::abs(empirical_inflation(ecdf, model.V, 0, 2.0)) <= 1e-12);
    CHECK(std::abs(empirical_inflation(ecdf, model.V, 1, 2.0)) <= 1e-12);
  }
}

TEST_CASE("finite-sample correction constant") {
  CTable ctable(5000);
  SUBCASE("no off-diagonal mass leaves only c(n_k)") {
    CHECK(correction_delta(100, 100, 0.0, 4, ctable) == ctable.c(100));
  }
  SUBCASE("worked K=2 example with a supplied c") {
    // delta = c + (2*0.125/100) * min{2 sqrt(pi/2), 0.01 + sqrt((log4 + log1e4)/2)}
    const double second =
        correction_delta(10000, 10000, 0.125, 2, ctable) - ctable.c(10000);
    CHECK(0.0125 + second == doctest::Approx(0.01828).epsilon(6e-4));
    const double expected_min =
        std::min(2.0 * std::sqrt(std::numbers::pi / 2.0),
                 0.01 + std::sqrt((std::log(4.0) + std::log(1e4)) / 2.0));
    CHECK(second == doctest::Approx(0.0025 * expected_min).epsilon(1e-12));
  }
  SUBCASE("second term vanishes as n_star grows") {
    const double far = correction_delta(100, 1000000000, 0.5, 4, ctable);
    CHECK(far - ctable.c(100) <= 1e-3);
  }
}

TEST_CASE("adaptive label-conditional calibration") {
  CTable ctable(5000);
  Rng rng = make_rng(21, 0, "t");
  const int K = 4;
  const auto y = cyclic_labels(400, K);
  const auto scores = synthetic_scores(y, K, rng);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(K, K);

  SUBCASE("V = I with the optimistic floor reproduces the standard method") {
    const auto standard = standard_label_conditional(scores, y, 0.1);
    const auto adaptive =
        adaptive_label_conditional(scores, y, eye, 0.1, ctable, true);
    for (int k = 0; k < K; ++k) CHECK(adaptive.tau[k] == standard.tau[k]);
  }
  SUBCASE("V = I conservative thresholds dominate the standard ones") {
    const auto standard = standard_label_conditional(scores, y, 0.1);
    const auto adaptive =
        adaptive_label_conditional(scores, y, eye, 0.1, ctable, false);
    for (int k = 0; k < K; ++k) CHECK(adaptive.tau[k] >= standard.tau[k]);
  }
  SUBCASE("with noise the optimistic set is never larger than the standard set") {
    const auto model = build_rr_uniform(K, 0.15);
    Rng crng = make_rng(22, 0, "t");
    const auto y_noisy = corrupt_labels(y, model, crng);
    const auto scores2 = synthetic_scores(y, K, rng);
    const auto standard = standard_label_conditional(scores2, y_noisy, 0.1);
    const auto adaptive = adaptive_label_conditional(scores2, y_noisy, model.V,
                                                     0.1, ctable, true);
    for (int k = 0; k < K; ++k) CHECK(adaptive.tau[k] <= standard.tau[k]);
  }
}

TEST_CASE("solver index rule with the correction forced to zero") {
  // With delta_hat = 0 and delta_const = 0 the rule reduces to the
  // ceil((1-alpha) n)-th smallest order statistic.
  std::vector<double> sorted(20);
  for (int i = 0; i < 20; ++i) sorted[static_cast<std::size_t>(i)] = (i + 1) / 20.0;
  const std::vector<double> zeros(20, 0.0);
  const double tau = solve_adaptive_threshold(sorted, zeros, 0.0, 0.1, false, 0.0);
  CHECK(tau == sorted[static_cast<std::size_t>(
                   static_cast<int>(std::ceil(0.9 * 20)) - 1)]);
}

TEST_CASE("bounded-noise calibration") {
  CTable ctable(5000);
  Rng rng = make_rng(31, 0, "t");
  const int K = 4;
  const double eps = 0.2;
  const auto model = build_rr_uniform(K, eps);
  const auto y_clean = cyclic_labels(600, K);
  Rng crng = make_rng(32, 0, "t");
  const auto y = corrupt_labels(y_clean, model, crng);
  const auto scores = synthetic_scores(y_clean, K, rng);

  SUBCASE("degenerate region reproduces the known-V thresholds bit for bit") {
    const auto known =
        adaptive_label_conditional(scores, y, model.V, 0.1, ctable, true);
    const auto region = NoiseRegion::degenerate(model.V);
    const auto bounded = adaptive_ci(scores, y, region, 0.1, ctable, true);
    for (int k = 0; k < K; ++k) CHECK(bounded.tau[k] == known.tau[k]);
    const auto known_c =
        adaptive_label_conditional(scores, y, model.V, 0.1, ctable, false);
    const auto bounded_c = adaptive_ci(scores, y, region, 0.1, ctable, false);
    for (int k = 0; k < K; ++k) CHECK(bounded_c.tau[k] == known_c.tau[k]);
  }

  SUBCASE("the uniform-frequency region matches a direct evaluation") {
    // Under uniform contaminated frequencies the region reduces to
    // v_upp = -xi_low/K, v_low = -xi_upp/K off the diagonal, and the
    // plug-in estimate to the two-term randomized response form.
    const double xi_low = 0.15 / (1.0 - 0.15);
    const double xi_upp = 0.25 / (1.0 - 0.25);
    const auto region = NoiseRegion::randomized_response(
        K, xi_low, xi_upp, xi_upp, model.rho_tilde, 0.01);
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) {
        if (l == k) continue;
        CHECK(region.v_upp(k, l) == doctest::Approx(-xi_low / K).epsilon(1e-12));
        CHECK(region.v_low(k, l) == doctest::Approx(-xi_upp / K).epsilon(1e-12));
      }
      CHECK(region.zeta_upp[k] == 0.0);
    }
    const auto thresholds = adaptive_ci(scores, y, region, 0.1, ctable, false);

    // Independent evaluation of the simplified plug-in estimator.
    EcdfFamily ecdf(scores, y, K);
    const double delta_xi = xi_upp - xi_low;
    for (int k = 0; k < K; ++k) {
      const auto& sorted = ecdf.group_scores(k);
      const int n_k = static_cast<int>(sorted.size());
      std::vector<double> delta_hat(sorted.size());
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double t = sorted[i];
        double mean_other = 0.0;
        for (int l = 0; l < K; ++l) {
          if (l != k) mean_other += ecdf.F(l, k, t);
        }
        mean_other /= K - 1;
        const double gap = ecdf.F(k, k, t) - mean_other;
        delta_hat[i] = xi_low * (1.0 - 1.0 / K) * gap -
                       delta_xi * (1.0 - 1.0 / K) * std::abs(gap);
      }
      const double delta_const =
          correction_delta_ci(region, k, n_k, ecdf.min_group_size(), ctable);
      const double expected = solve_adaptive_threshold(
          sorted, delta_hat, delta_const, 0.1, false, 0.0);
      CHECK(thresholds.tau[k] == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  SUBCASE("widening the interval only enlarges the sets") {
    auto region_for = [&](double lo) {
      return NoiseRegion::randomized_response(
          K, lo / (1.0 - lo), eps / (1.0 - eps), eps / (1.0 - eps),
          model.rho_tilde, 0.01);
    };
    Thresholds prev;
    bool first = true;
    for (double lo : {0.2, 0.15, 0.1, 0.05, 0.0}) {
      const auto tau = adaptive_ci(scores, y, region_for(lo), 0.1, ctable, true);
      if (!first) {
        for (int k = 0; k < K; ++k) CHECK(tau.tau[k] >= prev.tau[k] - 1e-15);
      }
      prev = tau;
      first = false;
    }
  }

  SUBCASE("region invariants are enforced") {
    auto region = NoiseRegion::degenerate(model.V);
    region.v_low(0, 1) = region.v_upp(0, 1) + 0.1;
    CHECK_THROWS_AS(adaptive_ci(scores, y, region, 0.1, ctable, true),
                    RegionInvariantViolation);
  }
}

TEST_CASE("marginal calibration") {
  CTable ctable(5000);
  const int K = 4;
  Rng rng = make_rng(41, 0, "t");
  const auto y = cyclic_labels(500, K);
  const auto scores = synthetic_scores(y, K, rng);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(K, 1.0 / K);

  SUBCASE("V = I optimistic reproduces the standard marginal threshold") {
    const double std_tau = standard_marginal(scores, y, 0.1);
    const double ada = adaptive_marginal(scores, y,
                                         Eigen::MatrixXd::Identity(K, K),
                                         uniform, 0.1, ctable, true);
    CHECK(ada == std_tau);
  }

  SUBCASE("hand-computed inflation on a K=2 toy") {
    // Two groups of five samples with fully controlled score columns.
    ScoreMatrix toy;
    toy.s.resize(10, 2);
    std::vector<int> labels(10);
    const double g0c0[5] = {0.05, 0.15, 0.25, 0.35, 0.95};
    const double g0c1[5] = {0.50, 0.60, 0.70, 0.80, 0.90};
    const double g1c0[5] = {0.45, 0.55, 0.65, 0.75, 0.85};
    const double g1c1[5] = {0.10, 0.20, 0.30, 0.40, 0.96};
    for (int i = 0; i < 5; ++i) {
      labels[static_cast<std::size_t>(i)] = 0;
      toy.s(i, 0) = g0c0[i];
      toy.s(i, 1) = g0c1[i];
      labels[static_cast<std::size_t>(i + 5)] = 1;
      toy.s(i + 5, 0) = g1c0[i];
      toy.s(i + 5, 1) = g1c1[i];
    }
    const auto model = build_rr_uniform(2, 0.2);
    EcdfFamily ecdf(toy, labels, 2);
    const Eigen::VectorXd rho_tilde = Eigen::VectorXd::Constant(2, 0.5);
    const Eigen::VectorXd rho = clean_frequencies(model.V, rho_tilde);
    CHECK(rho[0] == doctest::Approx(0.5).epsilon(1e-12));
    // Spreadsheet-style evaluation of the pooled inflation estimate at 0.5:
    // F_0^0(0.5) = 4/5, F_1^0(0.5) = 1/5, F_1^1(0.5) = 4/5, F_0^1(0.5) = 1/5,
    // so each k contributes (0.5*1.125 - 0.5)*0.8 + 0.5*(-0.125)*0.2.
    const double by_hand =
        2.0 * ((0.5 * 1.125 - 0.5) * 0.8 + 0.5 * (-0.125) * 0.2);
    CHECK(marginal_inflation(ecdf, model.V, rho, rho_tilde, 0.5) ==
          doctest::Approx(by_hand).epsilon(1e-12));
  }

  SUBCASE("supplied vs estimated contaminated frequencies") {
    const auto model = build_rr_uniform(K, 0.1);
    const int n = 100000;
    const auto y_clean = cyclic_labels(n, K);
    Rng crng = make_rng(42, 0, "t");
    const auto y_noisy = corrupt_labels(y_clean, model, crng);
    Rng srng = make_rng(43, 0, "t");
    const auto big_scores = synthetic_scores(y_clean, K, srng);
    Eigen::VectorXd rho_hat = Eigen::VectorXd::Zero(K);
    for (int v : y_noisy) rho_hat[v] += 1.0;
    rho_hat /= static_cast<double>(n);
    const double with_truth = adaptive_marginal(
        big_scores, y_noisy, model.V, model.rho_tilde, 0.1, ctable, true);
    const double with_estimate = adaptive_marginal(
        big_scores, y_noisy, model.V, rho_hat, 0.1, ctable, true);
    CHECK(std::abs(with_truth - with_estimate) < 0.01);
  }

  SUBCASE("frequency validation") {
    Eigen::VectorXd bad = uniform;
    bad[0] = 0.0;
    CHECK_THROWS_AS(adaptive_marginal(scores, y,
                                      Eigen::MatrixXd::Identity(K, K), bad,
                                      0.1, ctable, true),
                    NonPositiveFrequency);
  }
}

TEST_CASE("calibration-conditional correction") {
  const int K = 2;
  const auto model = build_rr_uniform(K, 0.2);

  SUBCASE("V = I recovers the clean-data correction") {
    const double delta =
        correction_delta_cc(10000, 10000, 0.0, 1.0, K, 0.1);
    CHECK(delta ==
          doctest::Approx(std::sqrt(std::log(10.0) / 20000.0)).epsilon(1e-12));
  }
  SUBCASE("gamma split sums to gamma") {
    const double off = model.off_diag_abs_sum(0);
    const double row = off + std::abs(model.V(0, 0));
    const double ratio = off / row;
    const double gamma = 0.1;
    const double gamma1 = gamma * (1.0 - 0.5 * ratio);
    const double gamma2 = 0.5 * gamma * ratio;
    CHECK(gamma1 + gamma2 == doctest::Approx(gamma).epsilon(1e-15));
  }
  SUBCASE("worked K=2 example") {
    const double off = 0.125, row = 1.25;
    const double gamma = 0.1;
    const double gamma1 = gamma * (1.0 - 0.5 * off / row);
    const double gamma2 = 0.5 * gamma * off / row;
    const double expected =
        std::sqrt(std::log(1.0 / gamma1) / 2e4) +
        2.0 * off * std::sqrt((std::log(4.0) + std::log(1.0 / gamma2)) / 2e4);
    CHECK(correction_delta_cc(10000, 10000, off, row, K, gamma) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("gamma is validated") {
    Rng rng = make_rng(51, 0, "t");
    const auto y = cyclic_labels(100, K);
    const auto scores = synthetic_scores(y, K, rng);
    CHECK_THROWS_AS(adaptive_calibration_conditional(scores, y, model.V, 0.1,
                                                     1.5, true),
                    GammaOutOfRange);
  }
  SUBCASE("thresholds are more conservative than the known-V variant") {
    CTable ctable(5000);
    Rng rng = make_rng(52, 0, "t");
    const auto y = cyclic_labels(2000, K);
    const auto scores = synthetic_scores(y, K, rng);
    const auto cc =
        adaptive_calibration_conditional(scores, y, model.V, 0.1, 0.1, false);
    const auto known =
        adaptive_label_conditional(scores, y, model.V, 0.1, ctable, false);
    // delta_cc(n, gamma=0.1) > delta(n) at these sizes, so tau_cc >= tau.
    for (int k = 0; k < K; ++k) CHECK(cc.tau[k] >= known.tau[k] - 1e-15);
  }
}

TEST_CASE("theoretical bound report") {
  CTable ctable(5000);
  SUBCASE("identity V recovers the clean-data interval") {
    const auto [lo, hi] = worst_case_coverage(
        Eigen::MatrixXd::Identity(3, 3), 0, 0.1, 99);
    CHECK(lo == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(hi == doctest::Approx(0.9 + 1.0 / 100).epsilon(1e-12));
  }
  SUBCASE("worked K=2 interval with clamping") {
    const auto model = build_rr_uniform(2, 0.2);
    const auto [lo, hi] = worst_case_coverage(model.V, 0, 0.1, 999);
    CHECK(lo == doctest::Approx(0.775).epsilon(1e-9));
    CHECK(hi == 1.0);  // 1.026 clamped
  }
  SUBCASE("the additive Huber-style bound beats the ratio form for eps > 0") {
    for (double eps : {0.05, 0.1, 0.2, 0.4}) {
      for (int K : {2, 5, 10}) {
        const double ours = eps / (1.0 - eps) * (1.0 - 1.0 / K);
        const double additive = eps * (1.0 - 1.0 / K);
        CHECK(ours > additive);
      }
    }
  }
  SUBCASE("phi terms require density bounds") {
    BoundRequest request;
    request.alpha = 0.1;
    request.n_k = 100;
    request.n_star = 100;
    request.want_phi = true;
    const auto model = build_rr_uniform(2, 0.1);
    CHECK_THROWS_AS(theoretical_bounds(model.V, 0, request, ctable),
                    MissingDensityBounds);
    request.f_max = 2.0;
    request.f_min = 0.5;
    request.gamma = 0.1;
    const auto report = theoretical_bounds(model.V, 0, request, ctable);
    CHECK(report.phi.has_value());
    CHECK(*report.phi > 0.0);
    CHECK(report.phi_cc.has_value());
    CHECK(!report.phi_marg.has_value());
    // The slack shrinks with the sample size.
    BoundRequest larger = request;
    larger.n_k = 10000;
    larger.n_star = 10000;
    const auto tighter = theoretical_bounds(model.V, 0, larger, ctable);
    CHECK(*tighter.phi < *report.phi);
  }
}
