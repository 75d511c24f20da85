#include "cln/noise_region.hpp"

#include <cmath>
#include <string>

#include "cln/contamination.hpp"
#include "cln/errors.hpp"

namespace cln {

namespace {
constexpr double kTol = 1e-12;
}

double NoiseRegion::width_star(int k) const {
  double w = 0.0;
  for (int l = 0; l < K; ++l) {
    if (l != k) w = std::max(w, width(k, l));
  }
  return w;
}

double NoiseRegion::upp_abs_sum(int k) const {
  double s = 0.0;
  for (int l = 0; l < K; ++l) {
    if (l != k) s += std::abs(v_upp(k, l));
  }
  return s;
}

double NoiseRegion::bar_abs_sum(int k) const {
  double s = 0.0;
  for (int l = 0; l < K; ++l) {
    if (l != k) s += std::abs(v_bar(k, l));
  }
  return s;
}

double NoiseRegion::width_sum(int k) const {
  double s = 0.0;
  for (int l = 0; l < K; ++l) {
    if (l != k) s += width(k, l);
  }
  return s;
}

void NoiseRegion::validate() const {
  if (K < 2 || v_low.rows() != K || v_low.cols() != K || v_upp.rows() != K ||
      v_upp.cols() != K || v_bar.rows() != K || v_bar.cols() != K ||
      zeta_upp.size() != K) {
    throw RegionInvariantViolation("noise region has inconsistent dimensions");
  }
  if (!(alpha_v >= 0.0 && alpha_v < 1.0)) {
    throw RegionInvariantViolation("alpha_v must lie in [0, 1)");
  }
  for (int k = 0; k < K; ++k) {
    if (zeta_upp[k] < -kTol) {
      throw RegionInvariantViolation("zeta_upp[" + std::to_string(k) +
                                     "] is negative");
    }
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      if (v_low(k, l) > v_upp(k, l) + kTol) {
        throw RegionInvariantViolation("v_low > v_upp at (" +
                                       std::to_string(k) + "," +
                                       std::to_string(l) + ")");
      }
      const double bar = std::abs(v_bar(k, l));
      if (std::abs(v_low(k, l)) > bar + kTol ||
          std::abs(v_upp(k, l)) > bar + kTol) {
        throw RegionInvariantViolation(
            "confidence bounds exceed the a-priori bound at (" +
            std::to_string(k) + "," + std::to_string(l) + ")");
      }
    }
  }
}

NoiseRegion NoiseRegion::degenerate(const Eigen::MatrixXd& V) {
  const int K = static_cast<int>(V.rows());
  NoiseRegion region;
  region.K = K;
  region.v_low = V;
  region.v_low.diagonal().setZero();
  region.v_upp = region.v_low;
  region.v_bar = region.v_low.cwiseAbs();
  region.alpha_v = 0.0;
  region.zeta_upp = Eigen::VectorXd::Zero(K);
  region.validate();
  return region;
}

NoiseRegion NoiseRegion::randomized_response(int K, double xi_low,
                                             double xi_upp, double xi_bar,
                                             const Eigen::VectorXd& rho_tilde,
                                             double alpha_v) {
  if (!(0.0 <= xi_low && xi_low <= xi_upp && xi_upp <= xi_bar)) {
    throw RegionInvariantViolation(
        "require 0 <= xi_low <= xi_upp <= xi_bar for a randomized response "
        "region");
  }
  NoiseRegion region;
  region.K = K;
  region.alpha_v = alpha_v;
  region.v_low = Eigen::MatrixXd::Zero(K, K);
  region.v_upp = Eigen::MatrixXd::Zero(K, K);
  region.v_bar = Eigen::MatrixXd::Zero(K, K);
  region.zeta_upp = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    const double a = K * rho_tilde[k];
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      region.v_upp(k, l) = -xi_low * rho_tilde[l] / (a + xi_upp * (a - 1.0));
      region.v_low(k, l) = -xi_upp * rho_tilde[l] / (a + xi_low * (a - 1.0));
      // The denominator is monotone in xi, so its minimum over [0, xi_bar]
      // sits at one of the endpoints.
      const double den = a + std::min(0.0, xi_bar * (a - 1.0));
      region.v_bar(k, l) = xi_bar * rho_tilde[l] / den;
    }
  }
  region.validate();
  return region;
}

NoiseRegion NoiseRegion::two_level_rr(int K, double xi_low, double xi_upp,
                                      double nu_low, double nu_upp,
                                      double xi_bar, double alpha_v) {
  if (!(0.0 <= xi_low && xi_low <= xi_upp && xi_upp <= xi_bar)) {
    throw RegionInvariantViolation(
        "require 0 <= xi_low <= xi_upp <= xi_bar for a two-level region");
  }
  if (!(0.0 <= nu_low && nu_low <= nu_upp && nu_upp <= 1.0)) {
    throw RegionInvariantViolation("require 0 <= nu_low <= nu_upp <= 1");
  }
  BlockStructure blocks(K);
  NoiseRegion region;
  region.K = K;
  region.alpha_v = alpha_v;
  region.v_low = Eigen::MatrixXd::Zero(K, K);
  region.v_upp = Eigen::MatrixXd::Zero(K, K);
  region.v_bar = Eigen::MatrixXd::Zero(K, K);
  const double zeta = two_level_zeta_upp(K, xi_low, xi_upp, nu_low, nu_upp);
  region.zeta_upp = Eigen::VectorXd::Constant(K, zeta);
  // |V_kl| is increasing in xi; within-block entries are largest at nu = 1
  // and cross-block ones at nu = 0.
  const double bar_within = 2.0 * xi_bar / K;
  const double bar_cross = xi_bar / K;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      if (blocks.same_block(k, l)) {
        region.v_upp(k, l) = -(xi_low / K) *
                             (1.0 + nu_low * (1.0 + 2.0 * xi_low)) /
                             (1.0 + nu_low * xi_low);
        region.v_low(k, l) = -(xi_upp / K) *
                             (1.0 + nu_upp * (1.0 + 2.0 * xi_upp)) /
                             (1.0 + nu_upp * xi_upp);
        region.v_bar(k, l) = bar_within;
      } else {
        region.v_upp(k, l) =
            -(xi_low / K) * (1.0 - nu_upp) / (1.0 + nu_upp * xi_low);
        region.v_low(k, l) =
            -(xi_upp / K) * (1.0 - nu_low) / (1.0 + nu_low * xi_upp);
        region.v_bar(k, l) = bar_cross;
      }
    }
  }
  region.validate();
  return region;
}

double two_level_zeta_upp(int K, double xi_low, double xi_upp, double nu_low,
                          double nu_upp) {
  const double first =
      (2.0 / K) *
      ((nu_upp - nu_low) +
       (nu_upp * xi_upp * xi_upp - nu_low * xi_low * xi_low) +
       nu_low * nu_upp * xi_low * xi_upp * (xi_upp - xi_low)) /
      ((1.0 + nu_upp * xi_upp) * (1.0 + nu_low * xi_low));
  const double second = (xi_low / K) * (nu_upp - nu_low) * (1.0 + xi_low) /
                        ((1.0 + nu_low * xi_low) * (1.0 + nu_upp * xi_low));
  return first + second;
}

}  // namespace cln
