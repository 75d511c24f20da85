#include "cln/estimation.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "cln/contamination.hpp"
#include "cln/errors.hpp"

namespace cln {

namespace {

constexpr double kDenomTol = 1e-6;

// lambda(l,k) = #(Y=l, f(X)=k) / n over the clean sample.
Eigen::MatrixXd joint_frequencies(const std::vector<int>& y,
                                  const std::vector<int>& f_hat, int K) {
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < y.size(); ++i) {
    lambda(y[i], f_hat[i]) += 1.0;
  }
  return lambda / static_cast<double>(y.size());
}

// Row-normalizes a joint table into a conditional Q(l,k) = P[f=k | label=l].
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& joint,
                              const char* which) {
  Eigen::MatrixXd out = joint;
  for (Eigen::Index l = 0; l < out.rows(); ++l) {
    const double mass = out.row(l).sum();
    if (mass <= 0.0) {
      throw EmptyCleanClass(std::string(which) + ": no samples with label " +
                            std::to_string(l));
    }
    out.row(l) /= mass;
  }
  return out;
}

// One multinomial resample of n draws from the flattened cell probabilities.
Eigen::MatrixXd resample_lambda(const Eigen::MatrixXd& lambda, int n,
                                Rng& rng) {
  const int K = static_cast<int>(lambda.rows());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(K, K);
  int remaining = n;
  double mass_left = 1.0;
  for (int l = 0; l < K && remaining > 0; ++l) {
    for (int k = 0; k < K && remaining > 0; ++k) {
      const double p = lambda(l, k);
      if (mass_left <= 0.0) break;
      const double q = std::clamp(p / mass_left, 0.0, 1.0);
      int c;
      if (l == K - 1 && k == K - 1) {
        c = remaining;
      } else {
        std::binomial_distribution<int> bin(remaining, q);
        c = bin(rng);
      }
      counts(l, k) = c;
      remaining -= c;
      mass_left -= p;
    }
  }
  return counts / static_cast<double>(n);
}

std::pair<double, double> percentile_interval(std::vector<double> samples,
                                              double tail) {
  std::sort(samples.begin(), samples.end());
  const int B = static_cast<int>(samples.size());
  const int lo = std::clamp(static_cast<int>(std::floor(tail * B)), 0, B - 1);
  const int hi =
      std::clamp(static_cast<int>(std::ceil((1.0 - tail) * B)) - 1, 0, B - 1);
  return {samples[static_cast<std::size_t>(lo)],
          samples[static_cast<std::size_t>(hi)]};
}

Eigen::VectorXd empirical_frequencies(const std::vector<int>& y, int K) {
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(K);
  for (int label : y) {
    if (label < 0 || label >= K) throw LabelOutOfRange("label out of range");
    freq[label] += 1.0;
  }
  for (int k = 0; k < K; ++k) {
    if (freq[k] == 0.0) {
      throw EmptyLabelClass("no noisy samples with label " +
                            std::to_string(k));
    }
  }
  return freq / static_cast<double>(y.size());
}

double xi_of(double eps) { return eps / (1.0 - eps); }

void check_fit_inputs(const Eigen::MatrixXd& probs, const std::vector<int>& y,
                      int K, const char* which) {
  if (probs.rows() != static_cast<Eigen::Index>(y.size()) || y.empty()) {
    throw DimensionMismatch(std::string(which) +
                            ": probabilities and labels disagree or empty");
  }
  if (probs.cols() != K) {
    throw DimensionMismatch(std::string(which) + ": expected " +
                            std::to_string(K) + " probability columns");
  }
}

}  // namespace

std::vector<int> argmax_labels(const Eigen::MatrixXd& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best;
    probs.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

FitSummary fit_general(const Eigen::MatrixXd& clean_probs,
                       const std::vector<int>& clean_y,
                       const Eigen::MatrixXd& noisy_probs,
                       const std::vector<int>& noisy_y, int K, double alpha_v,
                       int B, Rng& rng) {
  check_fit_inputs(clean_probs, clean_y, K, "clean");
  check_fit_inputs(noisy_probs, noisy_y, K, "noisy");
  FitSummary fit;
  fit.K = K;
  fit.B = B;
  fit.alpha_v = alpha_v;
  fit.method = "general";

  const std::vector<int> f_clean = argmax_labels(clean_probs);
  const std::vector<int> f_noisy = argmax_labels(noisy_probs);
  fit.Q_tilde = row_normalize(joint_frequencies(noisy_y, f_noisy, K), "noisy");
  fit.lambda = joint_frequencies(clean_y, f_clean, K);
  fit.Q = row_normalize(fit.lambda, "clean");
  fit.psi = fit.lambda.trace();
  double psi_tilde = 0.0;
  for (std::size_t i = 0; i < noisy_y.size(); ++i) {
    psi_tilde += noisy_y[i] == f_noisy[i] ? 1.0 : 0.0;
  }
  fit.psi_tilde = psi_tilde / static_cast<double>(noisy_y.size());

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(fit.Q_tilde);
  if (!(lu.rcond() > 1e-10)) {
    throw SingularQtilde("estimated Q_tilde is singular or ill-conditioned");
  }
  const Eigen::MatrixXd Q_tilde_inv = lu.inverse();
  fit.V_hat = fit.Q * Q_tilde_inv;

  const int n0 = static_cast<int>(clean_y.size());
  std::vector<std::vector<double>> boot(
      static_cast<std::size_t>(K) * K);
  for (int b = 0; b < B; ++b) {
    const Eigen::MatrixXd lam = resample_lambda(fit.lambda, n0, rng);
    Eigen::MatrixXd Qb = lam;
    bool ok = true;
    for (int l = 0; l < K; ++l) {
      const double mass = Qb.row(l).sum();
      if (mass <= 0.0) {
        ok = false;
        break;
      }
      Qb.row(l) /= mass;
    }
    if (!ok) {
      --b;  // a resample emptied a clean class; draw again
      continue;
    }
    const Eigen::MatrixXd Vb = Qb * Q_tilde_inv;
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) {
        boot[static_cast<std::size_t>(k) * K + l].push_back(Vb(k, l));
      }
    }
  }
  // Bonferroni across the K(K-1) off-diagonal entries.
  const double tail = alpha_v / (2.0 * K * (K - 1));
  NoiseRegion region;
  region.K = K;
  region.alpha_v = alpha_v;
  region.v_low = Eigen::MatrixXd::Zero(K, K);
  region.v_upp = Eigen::MatrixXd::Zero(K, K);
  region.v_bar = Eigen::MatrixXd::Zero(K, K);
  region.zeta_upp = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (l == k) continue;
      auto [lo, hi] =
          percentile_interval(boot[static_cast<std::size_t>(k) * K + l], tail);
      region.v_low(k, l) = lo;
      region.v_upp(k, l) = hi;
      region.v_bar(k, l) = std::max(std::abs(lo), std::abs(hi));
    }
    // Without structural knowledge the band width bounds the uniformity gap.
    region.zeta_upp[k] = region.width_star(k);
  }
  region.validate();
  fit.region = region;
  return fit;
}

FitSummary fit_rr(const Eigen::MatrixXd& clean_probs,
                  const std::vector<int>& clean_y,
                  const Eigen::MatrixXd& noisy_probs,
                  const std::vector<int>& noisy_y, int K, double alpha_v,
                  int B, double eps_bar, Rng& rng) {
  check_fit_inputs(clean_probs, clean_y, K, "clean");
  check_fit_inputs(noisy_probs, noisy_y, K, "noisy");
  if (!(eps_bar > 0.0 && eps_bar < 1.0)) {
    throw EpsilonOutOfRange("eps_bar must lie in (0, 1)");
  }
  FitSummary fit;
  fit.K = K;
  fit.B = B;
  fit.alpha_v = alpha_v;
  fit.method = "rr";

  const std::vector<int> f_clean = argmax_labels(clean_probs);
  const std::vector<int> f_noisy = argmax_labels(noisy_probs);
  fit.lambda = joint_frequencies(clean_y, f_clean, K);
  fit.Q = row_normalize(fit.lambda, "clean");
  fit.Q_tilde = row_normalize(joint_frequencies(noisy_y, f_noisy, K), "noisy");
  fit.psi = fit.lambda.trace();
  double acc = 0.0;
  for (std::size_t i = 0; i < noisy_y.size(); ++i) {
    acc += noisy_y[i] == f_noisy[i] ? 1.0 : 0.0;
  }
  fit.psi_tilde = acc / static_cast<double>(noisy_y.size());

  if (fit.psi - 1.0 / K < 1e-6) {
    throw ClassifierAtChance("clean accuracy " + std::to_string(fit.psi) +
                             " does not beat chance 1/K");
  }
  auto eps_from_psi = [&](double psi) {
    const double den = psi - 1.0 / K;
    if (den < 1e-9) return eps_bar;
    return std::clamp((psi - fit.psi_tilde) / den, 0.0, eps_bar);
  };
  fit.eps_hat = eps_from_psi(fit.psi);

  const int n0 = static_cast<int>(clean_y.size());
  std::vector<double> boot;
  boot.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const Eigen::MatrixXd lam = resample_lambda(fit.lambda, n0, rng);
    boot.push_back(eps_from_psi(lam.trace()));
  }
  auto [lo, hi] = percentile_interval(std::move(boot), alpha_v / 2.0);
  fit.eps_low = lo;
  fit.eps_upp = hi;

  const Eigen::VectorXd rho_tilde = empirical_frequencies(noisy_y, K);
  fit.region = NoiseRegion::randomized_response(
      K, xi_of(fit.eps_low), xi_of(fit.eps_upp), xi_of(eps_bar), rho_tilde,
      alpha_v);
  return fit;
}

std::pair<double, double> invert_two_level_system(double psi, double psi_tilde,
                                                  double phi, double phi_tilde,
                                                  int K) {
  const double half_k = K / 2.0;
  const double den_eps = half_k * psi - phi;
  if (std::abs(den_eps) < kDenomTol) {
    throw DegenerateDenominator("(K/2) psi - phi is too close to zero");
  }
  if (std::abs(phi - 0.5) < kDenomTol) {
    throw DegenerateDenominator("phi - 1/2 is too close to zero");
  }
  const double bracket = half_k * (psi - psi_tilde) - (phi - phi_tilde);
  const double eps = bracket / den_eps;
  double nu;
  if (std::abs(bracket) < 1e-12) {
    nu = 0.0;  // no detectable noise; nu is unidentified, return the RR case
  } else {
    nu = 1.0 - (phi - phi_tilde) * den_eps / ((phi - 0.5) * bracket);
  }
  return {eps, nu};
}

FitSummary fit_two_level_rr(const Eigen::MatrixXd& clean_probs,
                            const std::vector<int>& clean_y,
                            const Eigen::MatrixXd& noisy_probs,
                            const std::vector<int>& noisy_y, int K,
                            double alpha_v, int B, double eps_bar, Rng& rng) {
  if (K % 2 != 0) throw OddK("two-level fit requires an even K");
  check_fit_inputs(clean_probs, clean_y, K, "clean");
  check_fit_inputs(noisy_probs, noisy_y, K, "noisy");
  if (!(eps_bar > 0.0 && eps_bar < 1.0)) {
    throw EpsilonOutOfRange("eps_bar must lie in (0, 1)");
  }
  BlockStructure blocks(K);
  FitSummary fit;
  fit.K = K;
  fit.B = B;
  fit.alpha_v = alpha_v;
  fit.method = "two-level-rr";

  const std::vector<int> f_clean = argmax_labels(clean_probs);
  const std::vector<int> f_noisy = argmax_labels(noisy_probs);
  fit.lambda = joint_frequencies(clean_y, f_clean, K);
  fit.Q = row_normalize(fit.lambda, "clean");
  fit.Q_tilde = row_normalize(joint_frequencies(noisy_y, f_noisy, K), "noisy");
  fit.psi = fit.lambda.trace();
  auto block_accuracy = [&](const Eigen::MatrixXd& lam) {
    double s = 0.0;
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        if (blocks.same_block(l, k)) s += lam(l, k);
      }
    }
    return s;
  };
  fit.phi = block_accuracy(fit.lambda);
  double acc = 0.0, block_acc = 0.0;
  for (std::size_t i = 0; i < noisy_y.size(); ++i) {
    acc += noisy_y[i] == f_noisy[i] ? 1.0 : 0.0;
    block_acc += blocks.same_block(noisy_y[i], f_noisy[i]) ? 1.0 : 0.0;
  }
  fit.psi_tilde = acc / static_cast<double>(noisy_y.size());
  fit.phi_tilde = block_acc / static_cast<double>(noisy_y.size());

  auto [eps, nu] = invert_two_level_system(fit.psi, fit.psi_tilde, fit.phi,
                                           fit.phi_tilde, K);
  fit.eps_hat = std::clamp(eps, 0.0, eps_bar);
  fit.nu_hat = std::clamp(nu, 0.0, 1.0);

  const int n0 = static_cast<int>(clean_y.size());
  std::vector<double> boot_eps, boot_nu;
  boot_eps.reserve(static_cast<std::size_t>(B));
  boot_nu.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const Eigen::MatrixXd lam = resample_lambda(fit.lambda, n0, rng);
    const double psi_b = lam.trace();
    const double phi_b = block_accuracy(lam);
    const double den_eps = (K / 2.0) * psi_b - phi_b;
    if (std::abs(den_eps) < kDenomTol || std::abs(phi_b - 0.5) < kDenomTol) {
      boot_eps.push_back(eps_bar);
      boot_nu.push_back(1.0);
      continue;
    }
    const double bracket =
        (K / 2.0) * (psi_b - fit.psi_tilde) - (phi_b - fit.phi_tilde);
    boot_eps.push_back(std::clamp(bracket / den_eps, 0.0, eps_bar));
    if (std::abs(bracket) < 1e-12) {
      boot_nu.push_back(0.0);
    } else {
      const double nu_b = 1.0 - (phi_b - fit.phi_tilde) * den_eps /
                                    ((phi_b - 0.5) * bracket);
      boot_nu.push_back(std::clamp(nu_b, 0.0, 1.0));
    }
  }
  // alpha_v split evenly between the two intervals so they hold jointly.
  auto [eps_lo, eps_hi] = percentile_interval(std::move(boot_eps), alpha_v / 4.0);
  auto [nu_lo, nu_hi] = percentile_interval(std::move(boot_nu), alpha_v / 4.0);
  fit.eps_low = eps_lo;
  fit.eps_upp = eps_hi;
  fit.nu_low = nu_lo;
  fit.nu_upp = nu_hi;
  fit.region = NoiseRegion::two_level_rr(K, xi_of(fit.eps_low),
                                         xi_of(fit.eps_upp), fit.nu_low,
                                         fit.nu_upp, xi_of(eps_bar), alpha_v);
  return fit;
}

double epsilon_from_mismatch_rate(const std::vector<int>& y,
                                  const std::vector<int>& y_tilde, int K) {
  if (y.size() != y_tilde.size() || y.empty()) {
    throw DimensionMismatch("mismatch rate needs paired nonempty labels");
  }
  double mismatch = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mismatch += y[i] != y_tilde[i] ? 1.0 : 0.0;
  }
  mismatch /= static_cast<double>(y.size());
  return mismatch / (1.0 - 1.0 / K);
}

std::string FitSummary::serialize() const {
  std::ostringstream out;
  out.precision(12);
  out << "method=" << method << "\n";
  out << "K=" << K << "\n";
  out << "B=" << B << "\n";
  out << "alpha_v=" << alpha_v << "\n";
  out << "psi=" << psi << "\n";
  out << "psi_tilde=" << psi_tilde << "\n";
  if (method == "two-level-rr") {
    out << "phi=" << phi << "\n";
    out << "phi_tilde=" << phi_tilde << "\n";
  }
  if (method == "general") {
    out << "V_hat=";
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) {
        if (k + l > 0) out << ",";
        out << V_hat(k, l);
      }
    }
    out << "\n";
  } else {
    out << "eps_hat=" << eps_hat << "\n";
    out << "eps_low=" << eps_low << "\n";
    out << "eps_upp=" << eps_upp << "\n";
    if (method == "two-level-rr") {
      out << "nu_hat=" << nu_hat << "\n";
      out << "nu_low=" << nu_low << "\n";
      out << "nu_upp=" << nu_upp << "\n";
    }
  }
  out << "v_low=";
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (k + l > 0) out << ",";
      out << region.v_low(k, l);
    }
  }
  out << "\nv_upp=";
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (k + l > 0) out << ",";
      out << region.v_upp(k, l);
    }
  }
  out << "\n";
  return out.str();
}

}  // namespace cln
