#include "cln/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cln/calibration.hpp"
#include "cln/errors.hpp"

namespace cln {

namespace {

double offdiag_abs_sum(const Eigen::MatrixXd& V, int k) {
  double s = 0.0;
  for (Eigen::Index l = 0; l < V.cols(); ++l) {
    if (l != k) s += std::abs(V(k, l));
  }
  return s;
}

double harmonic(int n) {
  double h = 0.0;
  for (int j = 1; j <= n; ++j) h += 1.0 / j;
  return h;
}

double dkw_min_factor(int K, int n_star) {
  const double gauss = K * std::sqrt(std::numbers::pi / 2.0);
  const double dkw = 1.0 / std::sqrt(static_cast<double>(n_star)) +
                     std::sqrt((std::log(2.0 * K) + std::log(n_star)) / 2.0);
  return std::min(gauss, dkw);
}

}  // namespace

std::pair<double, double> worst_case_coverage(const Eigen::MatrixXd& V, int k,
                                              double alpha, int n_k) {
  const double s = offdiag_abs_sum(V, k);
  const double lower = 1.0 - alpha - s;
  const double upper = 1.0 - alpha + 1.0 / (n_k + 1.0) + s;
  return {std::clamp(lower, 0.0, 1.0), std::clamp(upper, 0.0, 1.0)};
}

double phi_label_conditional(const Eigen::MatrixXd& V, int k, int n_k,
                             int n_star, double f_max, double f_min,
                             CTable& ctable) {
  const int K = static_cast<int>(V.rows());
  const double s = offdiag_abs_sum(V, k);
  const double delta = correction_delta(n_k, n_star, s, K, ctable);
  return 2.0 * delta + 1.0 / n_star +
         (1.0 + 2.0 * s * (f_max / f_min) * harmonic(n_k + 1)) / n_k +
         (V(k, k) + s) / (n_k + 1.0);
}

double phi_ci(const NoiseRegion& region, const Eigen::MatrixXd& V, int k,
              int n_k, int n_star, double f_max, double f_min,
              CTable& ctable) {
  const int K = region.K;
  const double s = offdiag_abs_sum(V, k);
  double value = 1.0 / n_star;
  value += (1.0 + 4.0 * region.bar_abs_sum(k)) * region.alpha_v;
  value += 2.0 * ctable.c(n_k);
  value += (K - 1.0) *
           (2.0 * region.width_star(k) + std::abs(region.zeta_upp[k]));
  value += 4.0 * (region.upp_abs_sum(k) + region.width_sum(k)) /
           std::sqrt(static_cast<double>(n_star)) * dkw_min_factor(K, n_star);
  value += (2.0 / n_k) *
           (1.0 + s + s * (f_max / f_min) * harmonic(n_k + 1));
  return value;
}

double phi_marginal(const Eigen::MatrixXd& V, const Eigen::VectorXd& rho,
                    const Eigen::VectorXd& rho_tilde, int n_cal, int n_star,
                    double f_max, double f_min, CTable& ctable) {
  const int K = static_cast<int>(V.rows());
  double max_row_weighted = 0.0;    // max_k rho_k/rho~_k sum_l |V_kl|
  double max_diag_excess = 0.0;     // max_k (rho_k V_kk - rho~_k)/rho~_k
  double max_offdiag_weighted = 0.0;  // max_k rho_k/rho~_k sum_{l!=k} V_kl
  for (int k = 0; k < K; ++k) {
    double row_abs = 0.0, off_signed = 0.0;
    for (int l = 0; l < K; ++l) {
      row_abs += std::abs(V(k, l));
      if (l != k) off_signed += V(k, l);
    }
    const double w = rho[k] / rho_tilde[k];
    max_row_weighted = std::max(max_row_weighted, w * row_abs);
    max_diag_excess = std::max(
        max_diag_excess, (rho[k] * V(k, k) - rho_tilde[k]) / rho_tilde[k]);
    max_offdiag_weighted = std::max(max_offdiag_weighted, w * off_signed);
  }
  const double delta_marg =
      correction_delta_marg(V, rho, rho_tilde, n_cal, n_star, ctable);
  return 2.0 * delta_marg + 1.0 / n_cal + 1.0 / n_star +
         max_row_weighted / n_cal +
         harmonic(n_cal + 1) / n_cal *
             (max_diag_excess + (f_max / f_min) * max_offdiag_weighted);
}

double phi_cc(const Eigen::MatrixXd& V, int k, int n_k, int n_star,
              double gamma, double f_max, double f_min) {
  const int K = static_cast<int>(V.rows());
  const double s = offdiag_abs_sum(V, k);
  const double row_abs = s + std::abs(V(k, k));
  const double delta_cc = correction_delta_cc(n_k, n_star, s, row_abs, K, gamma);
  const double v_bar = 0.5 * (1.0 - 0.5 * s / row_abs);
  const double g = gamma * v_bar;
  double value = delta_cc;
  value += (1.0 + (V(k, k) + s) / g) / n_k;
  value += std::sqrt(std::log(3.0 / g) / (2.0 * n_k));
  value += 2.0 * s * std::sqrt((std::log(2.0 * K) + std::log(3.0 / g)) /
                               (2.0 * n_star));
  value += 2.0 * s * (f_max / f_min) / n_k *
           (std::log(n_k + 1.0) + (3.0 / g) * harmonic(n_k + 1));
  return value;
}

BoundReport theoretical_bounds(const Eigen::MatrixXd& V, int k,
                               const BoundRequest& request, CTable& ctable) {
  BoundReport report;
  report.k = k;
  report.alpha = request.alpha;
  report.n_k = request.n_k;
  report.n_star = request.n_star;
  report.v_offdiag_abs_sum = offdiag_abs_sum(V, k);
  auto [lo, hi] = worst_case_coverage(V, k, request.alpha, request.n_k);
  report.worst_lower = lo;
  report.worst_upper = hi;
  if (!request.want_phi) return report;
  if (!request.f_max || !request.f_min) {
    throw MissingDensityBounds(
        "phi bounds require both f_max and f_min to be supplied");
  }
  if (!(*request.f_max >= *request.f_min && *request.f_min > 0.0)) {
    throw MissingDensityBounds("require f_max >= f_min > 0");
  }
  report.phi = phi_label_conditional(V, k, request.n_k, request.n_star,
                                     *request.f_max, *request.f_min, ctable);
  if (request.region != nullptr) {
    report.phi_ci = phi_ci(*request.region, V, k, request.n_k, request.n_star,
                           *request.f_max, *request.f_min, ctable);
  }
  if (request.gamma) {
    report.phi_cc = phi_cc(V, k, request.n_k, request.n_star, *request.gamma,
                           *request.f_max, *request.f_min);
  }
  if (request.n_cal && request.rho && request.rho_tilde) {
    report.phi_marg =
        phi_marginal(V, *request.rho, *request.rho_tilde, *request.n_cal,
                     request.n_star, *request.f_max, *request.f_min, ctable);
  }
  return report;
}

std::string BoundReport::serialize() const {
  std::ostringstream out;
  out.precision(12);
  out << "label=" << k << " alpha=" << alpha << " n_k=" << n_k
      << " n_star=" << n_star << " v_offdiag=" << v_offdiag_abs_sum
      << " worst_lower=" << worst_lower << " worst_upper=" << worst_upper;
  if (phi) out << " phi=" << *phi;
  if (phi_ci) out << " phi_ci=" << *phi_ci;
  if (phi_marg) out << " phi_marg=" << *phi_marg;
  if (phi_cc) out << " phi_cc=" << *phi_cc;
  out << "\n";
  return out.str();
}

}  // namespace cln
