#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cln/noise_region.hpp"
#include "cln/rng.hpp"

namespace cln {

// Output of a contamination-model fit from a small clean sample plus an
// abundant noisy sample. The noisy-side quantities (Q_tilde, psi_tilde,
// phi_tilde) are treated as high precision and not resampled; the bootstrap
// resamples only the clean-sample multinomial lambda.
struct FitSummary {
  int K = 0;
  Eigen::MatrixXd Q_tilde;   // row-stochastic classifier accuracy on noisy labels
  Eigen::MatrixXd Q;         // same on clean labels
  Eigen::MatrixXd lambda;    // lambda(l,k) = P[f(X)=k, Y=l], sums to 1
  double psi = 0.0;          // top-1 accuracy on clean labels
  double psi_tilde = 0.0;    // top-1 accuracy on noisy labels
  double phi = 0.0;          // block accuracy (two-level fit only)
  double phi_tilde = 0.0;
  Eigen::MatrixXd V_hat;     // general fit point estimate
  double eps_hat = 0.0;
  double nu_hat = 0.0;
  double eps_low = 0.0, eps_upp = 0.0;
  double nu_low = 0.0, nu_upp = 1.0;
  NoiseRegion region;
  int B = 0;
  double alpha_v = 0.0;
  std::string method;

  std::string serialize() const;
};

// argmax label per probability row (ties to the smallest index).
std::vector<int> argmax_labels(const Eigen::MatrixXd& probs);

// General estimating-equation fit: V = Q * Q_tilde^{-1}, with a per-entry
// percentile bootstrap over the clean-sample multinomial, Bonferroni-adjusted
// across the K(K-1) off-diagonal entries to level alpha_v.
FitSummary fit_general(const Eigen::MatrixXd& clean_probs,
                       const std::vector<int>& clean_y,
                       const Eigen::MatrixXd& noisy_probs,
                       const std::vector<int>& noisy_y, int K, double alpha_v,
                       int B, Rng& rng);

// Randomized response fit: eps = (psi - psi_tilde) / (psi - 1/K), clamped to
// [0, eps_bar], with a percentile bootstrap interval mapped to a NoiseRegion
// through xi = eps / (1 - eps).
FitSummary fit_rr(const Eigen::MatrixXd& clean_probs,
                  const std::vector<int>& clean_y,
                  const Eigen::MatrixXd& noisy_probs,
                  const std::vector<int>& noisy_y, int K, double alpha_v,
                  int B, double eps_bar, Rng& rng);

// Two-level randomized response fit via the (psi, phi) estimating system;
// the two bootstrap intervals are Bonferroni-split (alpha_v / 2 each) so they
// hold simultaneously.
FitSummary fit_two_level_rr(const Eigen::MatrixXd& clean_probs,
                            const std::vector<int>& clean_y,
                            const Eigen::MatrixXd& noisy_probs,
                            const std::vector<int>& noisy_y, int K,
                            double alpha_v, int B, double eps_bar, Rng& rng);

// Closed-form inversion of the two-level estimating system, exposed for the
// forward/inverse round-trip checks.
std::pair<double, double> invert_two_level_system(double psi, double psi_tilde,
                                                  double phi, double phi_tilde,
                                                  int K);

// Matches a randomized response epsilon to an observed label mismatch rate:
// eps = mean(y != y_tilde) / (1 - 1/K). A convenience, not an estimator with
// coverage guarantees.
double epsilon_from_mismatch_rate(const std::vector<int>& y,
                                  const std::vector<int>& y_tilde, int K);

}  // namespace cln
