#pragma once

#include <Eigen/Dense>

namespace cln {

// A simultaneous confidence region [v_low, v_upp] for the off-diagonal
// entries of V = M^{-1}, at level 1 - alpha_v, together with the a-priori
// absolute bounds |v_bar| and the per-row uniformity bounds zeta_upp.
// Diagonal entries of the three matrices are not used and kept at zero.
struct NoiseRegion {
  int K = 0;
  Eigen::MatrixXd v_low;
  Eigen::MatrixXd v_upp;
  Eigen::MatrixXd v_bar;
  double alpha_v = 0.0;
  Eigen::VectorXd zeta_upp;

  double width(int k, int l) const { return v_upp(k, l) - v_low(k, l); }
  // max_{l != k} of the band width, the widest point of the confidence band.
  double width_star(int k) const;
  double upp_abs_sum(int k) const;    // sum_{l != k} |v_upp(k,l)|
  double bar_abs_sum(int k) const;    // sum_{l != k} |v_bar(k,l)|
  double width_sum(int k) const;      // sum_{l != k} width(k,l)

  // Throws RegionInvariantViolation if the region is inconsistent.
  void validate() const;

  // Zero-width region centred at a known V: alpha_v = 0, zeta_upp = 0,
  // v_bar = |V|. Calibrating against it reproduces the known-V algorithm.
  static NoiseRegion degenerate(const Eigen::MatrixXd& V);

  // Region induced by a confidence interval [xi_low, xi_upp] for
  // xi = eps/(1-eps) under a randomized response model with contaminated
  // label frequencies rho_tilde, and a deterministic bound xi <= xi_bar.
  static NoiseRegion randomized_response(int K, double xi_low, double xi_upp,
                                         double xi_bar,
                                         const Eigen::VectorXd& rho_tilde,
                                         double alpha_v);

  // Region induced by simultaneous intervals for xi and nu under a two-level
  // randomized response model with uniform label frequencies.
  static NoiseRegion two_level_rr(int K, double xi_low, double xi_upp,
                                  double nu_low, double nu_upp, double xi_bar,
                                  double alpha_v);
};

// The zeta_upp closed form for the two-level randomized response model.
double two_level_zeta_upp(int K, double xi_low, double xi_upp, double nu_low,
                          double nu_upp);

}  // namespace cln
