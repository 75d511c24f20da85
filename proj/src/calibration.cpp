#include "cln/calibration.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "cln/errors.hpp"

namespace cln {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha = " + std::to_string(alpha) +
                      " must lie in (0, 1)");
  }
}

// min{ K sqrt(pi/2), 1/sqrt(n*) + sqrt((log(2K) + log(n*)) / 2) }
double dkw_min_factor(int K, int n_star) {
  const double gauss = K * std::sqrt(std::numbers::pi / 2.0);
  const double dkw = 1.0 / std::sqrt(static_cast<double>(n_star)) +
                     std::sqrt((std::log(2.0 * K) + std::log(n_star)) / 2.0);
  return std::min(gauss, dkw);
}

}  // namespace

double solve_adaptive_threshold(const std::vector<double>& sorted_scores,
                                const std::vector<double>& delta_hat,
                                double delta_const, double alpha,
                                bool optimistic, double optimistic_floor) {
  const int n = static_cast<int>(sorted_scores.size());
  if (static_cast<int>(delta_hat.size()) != n) {
    throw DimensionMismatch("delta_hat must align with the order statistics");
  }
  for (int i = 1; i <= n; ++i) {
    double adjust = delta_hat[static_cast<std::size_t>(i) - 1] - delta_const;
    if (optimistic) adjust = std::max(adjust, optimistic_floor);
    if (static_cast<double>(i) / n >= 1.0 - alpha - adjust) {
      return sorted_scores[static_cast<std::size_t>(i) - 1];
    }
  }
  return 1.0;
}

Thresholds standard_label_conditional(const ScoreMatrix& scores,
                                      const std::vector<int>& y_noisy,
                                      double alpha) {
  check_alpha(alpha);
  const int K = scores.num_labels();
  EcdfFamily ecdf(scores, y_noisy, K);
  Eigen::VectorXd tau(K);
  for (int k = 0; k < K; ++k) {
    const auto& sorted = ecdf.group_scores(k);
    const int n_k = static_cast<int>(sorted.size());
    const int idx =
        static_cast<int>(std::ceil((1.0 + n_k) * (1.0 - alpha)));
    tau[k] = idx > n_k ? 1.0 : sorted[static_cast<std::size_t>(idx) - 1];
  }
  return Thresholds(tau);
}

double standard_marginal(const ScoreMatrix& scores,
                         const std::vector<int>& y_noisy, double alpha) {
  check_alpha(alpha);
  const int n = scores.rows();
  if (n == 0) throw EmptyCalibration("calibration set is empty");
  if (static_cast<int>(y_noisy.size()) != n) {
    throw DimensionMismatch("label vector and score matrix sizes differ");
  }
  std::vector<double> pooled(n);
  for (int i = 0; i < n; ++i) {
    const int l = y_noisy[i];
    if (l < 0 || l >= scores.num_labels()) {
      throw LabelOutOfRange("noisy label out of range at row " +
                            std::to_string(i));
    }
    pooled[i] = scores.s(i, l);
  }
  std::sort(pooled.begin(), pooled.end());
  const int idx = static_cast<int>(std::ceil((1.0 + n) * (1.0 - alpha)));
  return idx > n ? 1.0 : pooled[static_cast<std::size_t>(idx) - 1];
}

double empirical_inflation(const EcdfFamily& ecdf, const Eigen::MatrixXd& V,
                           int k, double t) {
  const int K = ecdf.num_labels();
  double value = (V(k, k) - 1.0) * ecdf.F(k, k, t);
  for (int l = 0; l < K; ++l) {
    if (l != k) value += V(k, l) * ecdf.F(l, k, t);
  }
  return value;
}

double correction_delta(int n_k, int n_star, double v_offdiag_abs_sum, int K,
                        CTable& ctable) {
  return ctable.c(n_k) + 2.0 * v_offdiag_abs_sum /
                             std::sqrt(static_cast<double>(n_star)) *
                             dkw_min_factor(K, n_star);
}

double correction_delta_ci(const NoiseRegion& region, int k, int n_k,
                           int n_star, CTable& ctable) {
  return ctable.c(n_k) +
         2.0 * (region.upp_abs_sum(k) + region.width_sum(k)) /
             std::sqrt(static_cast<double>(n_star)) *
             dkw_min_factor(region.K, n_star) +
         2.0 * region.alpha_v * region.bar_abs_sum(k);
}

namespace {

// Shared core of the known-V and bounded-noise calibrations. The known-V
// variant passes the degenerate region, under which the band-width and
// uniformity penalties vanish identically and the correction constant
// collapses to correction_delta.
Thresholds adaptive_region_impl(const ScoreMatrix& scores,
                                const std::vector<int>& y_noisy,
                                const NoiseRegion& region, double alpha,
                                CTable& ctable, bool optimistic) {
  check_alpha(alpha);
  const int K = scores.num_labels();
  if (region.K != K) {
    throw DimensionMismatch("noise region and scores disagree on K");
  }
  region.validate();
  EcdfFamily ecdf(scores, y_noisy, K);
  const int n_star = ecdf.min_group_size();
  Eigen::VectorXd tau(K);
  for (int k = 0; k < K; ++k) {
    const auto& sorted = ecdf.group_scores(k);
    const int n_k = static_cast<int>(sorted.size());
    const double delta_const =
        correction_delta_ci(region, k, n_k, n_star, ctable);
    const double band = region.width_star(k);
    const double zeta = std::abs(region.zeta_upp[k]);
    std::vector<double> delta_hat(static_cast<std::size_t>(n_k));
    for (int i = 0; i < n_k; ++i) {
      const double t = sorted[static_cast<std::size_t>(i)];
      const double f_kk = ecdf.F(k, k, t);
      double value = 0.0;
      double gap_abs_sum = 0.0;
      double gap_sum = 0.0;
      for (int l = 0; l < K; ++l) {
        if (l == k) continue;
        const double gap = ecdf.F(l, k, t) - f_kk;
        value += region.v_upp(k, l) * gap;
        gap_sum += gap;
        gap_abs_sum += std::abs(gap);
      }
      value -= band * std::abs(gap_sum);
      value -= zeta * gap_abs_sum;
      delta_hat[static_cast<std::size_t>(i)] = value;
    }
    tau[k] = solve_adaptive_threshold(sorted, delta_hat, delta_const, alpha,
                                      optimistic, -(1.0 - alpha) / n_k);
  }
  return Thresholds(tau);
}

}  // namespace

Thresholds adaptive_label_conditional(const ScoreMatrix& scores,
                                      const std::vector<int>& y_noisy,
                                      const Eigen::MatrixXd& V, double alpha,
                                      CTable& ctable, bool optimistic) {
  return adaptive_region_impl(scores, y_noisy, NoiseRegion::degenerate(V),
                              alpha, ctable, optimistic);
}

Thresholds adaptive_ci(const ScoreMatrix& scores,
                       const std::vector<int>& y_noisy,
                       const NoiseRegion& region, double alpha, CTable& ctable,
                       bool optimistic) {
  return adaptive_region_impl(scores, y_noisy, region, alpha, ctable,
                              optimistic);
}

Eigen::VectorXd clean_frequencies(const Eigen::MatrixXd& V,
                                  const Eigen::VectorXd& rho_tilde) {
  // rho_k = sum_l M_lk rho_tilde_l with M = V^{-1}, i.e. V^T rho = rho_tilde.
  return V.transpose().partialPivLu().solve(rho_tilde);
}

double correction_delta_marg(const Eigen::MatrixXd& V,
                             const Eigen::VectorXd& rho,
                             const Eigen::VectorXd& rho_tilde, int n_cal,
                             int n_star, CTable& ctable) {
  const int K = static_cast<int>(V.rows());
  double max_offdiag = 0.0;
  for (int k = 0; k < K; ++k) {
    double s = 0.0;
    for (int l = 0; l < K; ++l) {
      if (l != k) s += std::abs(V(k, l));
    }
    max_offdiag = std::max(max_offdiag, s);
  }
  double freq_gap = 0.0;
  for (int k = 0; k < K; ++k) freq_gap += std::abs(rho[k] - rho_tilde[k]);
  const double gauss =
      K * static_cast<double>(K) * std::sqrt(std::numbers::pi / 2.0);
  const double dkw =
      1.0 / std::sqrt(static_cast<double>(n_star)) +
      std::sqrt((std::log(2.0 * K * K) + std::log(n_star)) / 2.0);
  return ctable.c(n_cal) + (2.0 * max_offdiag + freq_gap) /
                               std::sqrt(static_cast<double>(n_star)) *
                               std::min(gauss, dkw);
}

double adaptive_marginal(const ScoreMatrix& scores,
                         const std::vector<int>& y_noisy,
                         const Eigen::MatrixXd& V,
                         const Eigen::VectorXd& rho_tilde, double alpha,
                         CTable& ctable, bool optimistic) {
  check_alpha(alpha);
  const int K = scores.num_labels();
  const int n_cal = scores.rows();
  if (n_cal == 0) throw EmptyCalibration("calibration set is empty");
  if (rho_tilde.size() != K || V.rows() != K || V.cols() != K) {
    throw DimensionMismatch("V or rho_tilde has the wrong dimension");
  }
  for (int k = 0; k < K; ++k) {
    if (!(rho_tilde[k] > 0.0)) {
      throw NonPositiveFrequency("rho_tilde[" + std::to_string(k) +
                                 "] must be > 0");
    }
  }
  const Eigen::VectorXd rho = clean_frequencies(V, rho_tilde);

  EcdfFamily ecdf(scores, y_noisy, K);
  const int n_star = ecdf.min_group_size();

  std::vector<double> pooled(static_cast<std::size_t>(n_cal));
  for (int i = 0; i < n_cal; ++i) {
    pooled[static_cast<std::size_t>(i)] = scores.s(i, y_noisy[i]);
  }
  std::sort(pooled.begin(), pooled.end());

  const double delta_const =
      correction_delta_marg(V, rho, rho_tilde, n_cal, n_star, ctable);

  std::vector<double> delta_hat(static_cast<std::size_t>(n_cal));
  for (int i = 0; i < n_cal; ++i) {
    delta_hat[static_cast<std::size_t>(i)] = marginal_inflation(
        ecdf, V, rho, rho_tilde, pooled[static_cast<std::size_t>(i)]);
  }
  return solve_adaptive_threshold(pooled, delta_hat, delta_const, alpha,
                                  optimistic, -(1.0 - alpha) / n_cal);
}

double marginal_inflation(const EcdfFamily& ecdf, const Eigen::MatrixXd& V,
                          const Eigen::VectorXd& rho,
                          const Eigen::VectorXd& rho_tilde, double t) {
  const int K = ecdf.num_labels();
  double value = 0.0;
  for (int k = 0; k < K; ++k) {
    value += (rho[k] * V(k, k) - rho_tilde[k]) * ecdf.F(k, k, t);
    for (int l = 0; l < K; ++l) {
      if (l != k) value += rho[k] * V(k, l) * ecdf.F(l, k, t);
    }
  }
  return value;
}

double correction_delta_cc(int n_k, int n_star, double v_offdiag_abs_sum,
                           double v_row_abs_sum, int K, double gamma) {
  if (v_offdiag_abs_sum <= 0.0) {
    return std::sqrt(std::log(1.0 / gamma) / (2.0 * n_k));
  }
  const double ratio = v_offdiag_abs_sum / v_row_abs_sum;
  const double gamma1 = gamma * (1.0 - 0.5 * ratio);
  const double gamma2 = 0.5 * gamma * ratio;
  return std::sqrt(std::log(1.0 / gamma1) / (2.0 * n_k)) +
         2.0 * v_offdiag_abs_sum *
             std::sqrt((std::log(2.0 * K) + std::log(1.0 / gamma2)) /
                       (2.0 * n_star));
}

Thresholds adaptive_calibration_conditional(const ScoreMatrix& scores,
                                            const std::vector<int>& y_noisy,
                                            const Eigen::MatrixXd& V,
                                            double alpha, double gamma,
                                            bool optimistic) {
  check_alpha(alpha);
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw GammaOutOfRange("gamma = " + std::to_string(gamma) +
                          " must lie in (0, 1)");
  }
  const int K = scores.num_labels();
  const NoiseRegion region = NoiseRegion::degenerate(V);
  EcdfFamily ecdf(scores, y_noisy, K);
  const int n_star = ecdf.min_group_size();
  Eigen::VectorXd tau(K);
  for (int k = 0; k < K; ++k) {
    const auto& sorted = ecdf.group_scores(k);
    const int n_k = static_cast<int>(sorted.size());
    double offdiag = 0.0, row_abs = 0.0;
    for (int l = 0; l < K; ++l) {
      row_abs += std::abs(V(k, l));
      if (l != k) offdiag += std::abs(V(k, l));
    }
    const double delta_const =
        correction_delta_cc(n_k, n_star, offdiag, row_abs, K, gamma);
    const double floor = -std::sqrt(std::log(1.0 / gamma) / (2.0 * n_k));
    std::vector<double> delta_hat(static_cast<std::size_t>(n_k));
    for (int i = 0; i < n_k; ++i) {
      const double t = sorted[static_cast<std::size_t>(i)];
      const double f_kk = ecdf.F(k, k, t);
      double value = 0.0;
      for (int l = 0; l < K; ++l) {
        if (l != k) value += region.v_upp(k, l) * (ecdf.F(l, k, t) - f_kk);
      }
      delta_hat[static_cast<std::size_t>(i)] = value;
    }
    tau[k] = solve_adaptive_threshold(sorted, delta_hat, delta_const, alpha,
                                      optimistic, floor);
  }
  return Thresholds(tau);
}

}  // namespace cln
