#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cln/ctable.hpp"
#include "cln/ecdf.hpp"
#include "cln/noise_region.hpp"
#include "cln/scores.hpp"

namespace cln {

// ---------------------------------------------------------------------------
// Standard split-conformal calibration (no contamination adjustment).
// ---------------------------------------------------------------------------

// tau_k = ceil((1+n_k)(1-alpha))-th smallest score of the calibration points
// with noisy label k, or 1 when that index overflows n_k.
Thresholds standard_label_conditional(const ScoreMatrix& scores,
                                      const std::vector<int>& y_noisy,
                                      double alpha);

// Pooled variant over the scores s(X_i, y_noisy_i).
double standard_marginal(const ScoreMatrix& scores,
                         const std::vector<int>& y_noisy, double alpha);

// ---------------------------------------------------------------------------
// Adaptive calibration.
// ---------------------------------------------------------------------------

// Plug-in estimate of the coverage inflation factor for label k at score t:
// (V_kk - 1) F_k^k(t) + sum_{l != k} V_kl F_l^k(t).
double empirical_inflation(const EcdfFamily& ecdf, const Eigen::MatrixXd& V,
                           int k, double t);

// Core index rule shared by every adaptive variant: the smallest order
// statistic S_(i) with i/n >= 1 - alpha - adjust(i), where adjust is
// delta_hat[i] - delta_const, floored at optimistic_floor in the optimistic
// variant; 1.0 when no index qualifies. delta_hat[i-1] holds the inflation
// estimate at S_(i).
double solve_adaptive_threshold(const std::vector<double>& sorted_scores,
                                const std::vector<double>& delta_hat,
                                double delta_const, double alpha,
                                bool optimistic, double optimistic_floor);

// Finite-sample correction
// c(n_k) + (2 sum_{l!=k}|V_kl| / sqrt(n*)) *
//          min{ K sqrt(pi/2), 1/sqrt(n*) + sqrt((log 2K + log n*)/2) }.
double correction_delta(int n_k, int n_star, double v_offdiag_abs_sum, int K,
                        CTable& ctable);

// Threshold selection under a known inverse mixture matrix V. The optimistic
// variant lower-bounds the correction by -(1-alpha)/n_k, so it is never more
// conservative than the standard method.
Thresholds adaptive_label_conditional(const ScoreMatrix& scores,
                                      const std::vector<int>& y_noisy,
                                      const Eigen::MatrixXd& V, double alpha,
                                      CTable& ctable, bool optimistic);

// Threshold selection under a bounded contamination model described by a
// confidence region for the off-diagonals of V. With a degenerate region this
// reduces to adaptive_label_conditional exactly (it is the same code path).
Thresholds adaptive_ci(const ScoreMatrix& scores,
                       const std::vector<int>& y_noisy,
                       const NoiseRegion& region, double alpha, CTable& ctable,
                       bool optimistic);

// Pooled inflation estimate used by the marginal calibration:
// sum_k [ (rho_k V_kk - rho~_k) F_k^k(t) + rho_k sum_{l != k} V_kl F_l^k(t) ].
double marginal_inflation(const EcdfFamily& ecdf, const Eigen::MatrixXd& V,
                          const Eigen::VectorXd& rho,
                          const Eigen::VectorXd& rho_tilde, double t);

// Single pooled threshold with marginal coverage. rho is recovered from
// rho_tilde by solving V^T rho = rho_tilde.
double adaptive_marginal(const ScoreMatrix& scores,
                         const std::vector<int>& y_noisy,
                         const Eigen::MatrixXd& V,
                         const Eigen::VectorXd& rho_tilde, double alpha,
                         CTable& ctable, bool optimistic);

// Calibration-conditional variant: the coverage statement holds with
// probability >= 1-gamma over the calibration sample. Uses the two-part
// correction with gamma split between the uniform-order-statistics term and
// the DKW term in proportion to the off-diagonal mass of V.
Thresholds adaptive_calibration_conditional(const ScoreMatrix& scores,
                                            const std::vector<int>& y_noisy,
                                            const Eigen::MatrixXd& V,
                                            double alpha, double gamma,
                                            bool optimistic);

// The correction constant used by the calibration-conditional variant,
// exposed for diagnostics and tests.
double correction_delta_cc(int n_k, int n_star, double v_offdiag_abs_sum,
                           double v_row_abs_sum, int K, double gamma);

// Correction constant of the bounded-noise calibration; collapses to
// correction_delta under a degenerate region.
double correction_delta_ci(const NoiseRegion& region, int k, int n_k,
                           int n_star, CTable& ctable);

// Correction constant of the marginal calibration.
double correction_delta_marg(const Eigen::MatrixXd& V,
                             const Eigen::VectorXd& rho,
                             const Eigen::VectorXd& rho_tilde, int n_cal,
                             int n_star, CTable& ctable);

// rho recovered from rho_tilde by solving V^T rho = rho_tilde.
Eigen::VectorXd clean_frequencies(const Eigen::MatrixXd& V,
                                  const Eigen::VectorXd& rho_tilde);

}  // namespace cln
