#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cln/rng.hpp"

namespace cln {

enum class NoiseKind { General, RR, TwoLevelRR, BlockDiag, RandomU };

std::string to_string(NoiseKind kind);

// A label contamination process on K classes.
//
// T is the column-stochastic transition matrix with T(k,l) = P[noisy=k | clean=l].
// M is the row-stochastic mixture matrix with M(k,l) = P[clean=l | noisy=k],
// obtained from T and the clean label frequencies rho by Bayes' rule.
// V = M^{-1} is the inverse that drives all adaptive calibration corrections;
// its rows sum to one because M's do.
struct ContaminationModel {
  int K = 0;
  Eigen::MatrixXd T;
  Eigen::VectorXd rho;
  Eigen::VectorXd rho_tilde;
  Eigen::MatrixXd M;
  Eigen::MatrixXd V;
  NoiseKind kind = NoiseKind::General;
  double epsilon = 0.0;
  double nu = 0.0;
  std::uint64_t seed = 0;

  // Sum of |V(k,l)| over l != k, the quantity entering every correction term.
  double off_diag_abs_sum(int k) const;

  // Flat text block (K, kind, parameters, T row-major, rho) for provenance.
  std::string serialize() const;
};

// Two contiguous blocks of equal size K/2, the label hierarchy used by the
// two-level randomized response model.
struct BlockStructure {
  int K;
  explicit BlockStructure(int K);
  int block_of(int label) const { return label < K / 2 ? 0 : 1; }
  bool same_block(int a, int b) const { return block_of(a) == block_of(b); }
  std::vector<int> block(int which) const;
};

// Randomized response: a label is replaced by a uniform draw over [K] with
// total probability epsilon, i.e. T(k,l) = (1-eps)*1{k=l} + eps/K.
// V is checked against its Sherman-Morrison closed form.
ContaminationModel build_rr(int K, double epsilon, const Eigen::VectorXd& rho);
ContaminationModel build_rr_uniform(int K, double epsilon);

// Two-level randomized response with within-block flip rate eps*(1+nu)/K and
// cross-block rate eps*(1-nu)/K, under uniform label frequencies.
ContaminationModel build_two_level_rr(int K, double epsilon, double nu);

// General model from an explicit column-stochastic transition matrix.
ContaminationModel build_from_transition(const Eigen::MatrixXd& T,
                                         const Eigen::VectorXd& rho);

// T = (1-eps)*I + eps*P with P the column-stochastic noise kernel that is
// uniform within contiguous 2-label blocks (zero across blocks).
ContaminationModel build_block_diag(int K, double epsilon);

// T = (1-eps)*I + eps*U with U a column-normalized matrix of iid uniforms,
// reproducible from the given seed.
ContaminationModel build_random_u(int K, double epsilon, std::uint64_t seed);

// Closed-form V entries, exposed so the numeric inversion can be cross-checked.
double rr_v_diag(int K, double epsilon, const Eigen::VectorXd& rho_tilde, int k);
double rr_v_off(int K, double epsilon, const Eigen::VectorXd& rho_tilde, int k, int l);
double two_level_rr_v_diag(int K, double epsilon, double nu);
double two_level_rr_v_within(int K, double epsilon, double nu);
double two_level_rr_v_cross(int K, double epsilon, double nu);

// Draws one noisy label per clean label, independently, from column y[i] of T.
std::vector<int> corrupt_labels(const std::vector<int>& y,
                                const ContaminationModel& model, Rng& rng);

ContaminationModel parse_model(std::istream& in);

}  // namespace cln
