#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "cln/ctable.hpp"
#include "cln/noise_region.hpp"

namespace cln {

// Theoretical coverage diagnostics for a single label k. The worst-case
// interval needs only V; the phi terms additionally need the unobservable
// density-ratio bounds f_max/f_min and are omitted unless those are supplied.
struct BoundReport {
  int k = 0;
  double alpha = 0.0;
  int n_k = 0;
  int n_star = 0;
  double v_offdiag_abs_sum = 0.0;
  double worst_lower = 0.0;  // clamped to [0, 1]
  double worst_upper = 1.0;  // clamped to [0, 1]
  std::optional<double> phi;       // label-conditional upper-bound slack
  std::optional<double> phi_ci;    // bounded-noise variant
  std::optional<double> phi_marg;  // marginal variant
  std::optional<double> phi_cc;    // calibration-conditional variant

  std::string serialize() const;
};

struct BoundRequest {
  double alpha = 0.1;
  int n_k = 0;
  int n_star = 0;
  bool want_phi = false;  // request the density-ratio upper-bound terms
  std::optional<double> f_max;
  std::optional<double> f_min;
  std::optional<double> gamma;                // enables phi_cc
  std::optional<int> n_cal;                   // enables phi_marg
  std::optional<Eigen::VectorXd> rho;         // enables phi_marg
  std::optional<Eigen::VectorXd> rho_tilde;   // enables phi_marg
  const NoiseRegion* region = nullptr;        // enables phi_ci
};

// Worst-case coverage interval for standard label-conditional calibration
// under contamination, clamped to [0, 1]:
// [1 - alpha - S, 1 - alpha + 1/(n_k+1) + S], S = sum_{l != k} |V_kl|.
std::pair<double, double> worst_case_coverage(const Eigen::MatrixXd& V, int k,
                                              double alpha, int n_k);

double phi_label_conditional(const Eigen::MatrixXd& V, int k, int n_k,
                             int n_star, double f_max, double f_min,
                             CTable& ctable);

double phi_ci(const NoiseRegion& region, const Eigen::MatrixXd& V, int k,
              int n_k, int n_star, double f_max, double f_min, CTable& ctable);

double phi_marginal(const Eigen::MatrixXd& V, const Eigen::VectorXd& rho,
                    const Eigen::VectorXd& rho_tilde, int n_cal, int n_star,
                    double f_max, double f_min, CTable& ctable);

double phi_cc(const Eigen::MatrixXd& V, int k, int n_k, int n_star,
              double gamma, double f_max, double f_min);

// Evaluates every bound the request enables. Throws MissingDensityBounds when
// want_phi is set without both f_max and f_min.
BoundReport theoretical_bounds(const Eigen::MatrixXd& V, int k,
                               const BoundRequest& request, CTable& ctable);

}  // namespace cln
