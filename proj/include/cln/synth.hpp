#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "cln/rng.hpp"

namespace cln {

struct LabeledDataset {
  Eigen::MatrixXd X;
  std::vector<int> y;        // clean labels in [0, K)
  std::vector<int> y_tilde;  // noisy labels; empty until corruption

  int size() const { return static_cast<int>(X.rows()); }
};

// A probability model pi(x, k); either an analytic oracle tied to one of the
// generators below, or a trained multinomial logistic regression.
class ProbabilityModel {
 public:
  enum class Kind { MixtureOracle, SoftmaxOracle, Logistic };

  // Uniform predictor over zero classes; usable only after reassignment.
  ProbabilityModel() = default;

  // Oracle for the Gaussian hypercube mixture.
  static ProbabilityModel mixture_oracle(Eigen::MatrixXd cluster_means,
                                         std::vector<int> cluster_class,
                                         int num_classes);
  // Oracle (and trained model) of the form softmax(x^T W + b).
  static ProbabilityModel softmax_oracle(Eigen::MatrixXd W);
  static ProbabilityModel logistic(Eigen::MatrixXd W, Eigen::VectorXd b);

  Kind kind() const { return kind_; }
  int num_classes() const { return num_classes_; }

  // Row-normalized class probabilities for each row of X.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;

  const Eigen::MatrixXd& weights() const { return W_; }
  const Eigen::VectorXd& bias() const { return b_; }

 private:
  Kind kind_ = Kind::Logistic;
  int num_classes_ = 0;
  Eigen::MatrixXd W_;          // d x K
  Eigen::VectorXd b_;          // K
  Eigen::MatrixXd means_;      // clusters x d_informative
  std::vector<int> cluster_class_;
};

struct GeneratedData {
  LabeledDataset data;
  ProbabilityModel oracle;
};

// 2K unit-variance Gaussian clusters centred at distinct vertices of a
// side-2 hypercube in the first `informative` coordinates, assigned equally
// to classes; remaining coordinates are standard normal noise. Class
// frequencies are uniform by construction.
GeneratedData gen_hypercube_mixture(int n, int K, int d, std::uint64_t seed,
                                    int informative = 25);

// X ~ N(0, I_d); Y | X multinomial with weights propto exp((X^T W)_k) for a
// fixed standard normal W drawn from the seed.
GeneratedData gen_logistic(int n, int K, int d, std::uint64_t seed);

// Heteroscedastic decision-tree generator over four discrete features plus
// Gaussian noise coordinates. The per-leaf label distributions come from the
// supplied table (32 leaves x 4 labels); the built-in defaults are usable but
// not canonical.
struct TreeSpec {
  std::vector<std::array<double, 4>> leaf_probs;  // 32 rows
  static TreeSpec default_spec();
};
GeneratedData gen_tree(int n, int d, std::uint64_t seed,
                       const TreeSpec& spec = TreeSpec::default_spec());

// Multinomial logistic regression fit by full-batch gradient descent on the
// cross-entropy of the (possibly noisy) labels. Zero epochs leaves the
// weights at zero, i.e. a uniform predictor.
ProbabilityModel train_logistic(const Eigen::MatrixXd& X,
                                const std::vector<int>& y, int K, int epochs,
                                double lr, std::uint64_t seed);

// Cross-entropy loss and its analytic gradient, exposed for the
// finite-difference check in the tests.
double logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const Eigen::MatrixXd& W, const Eigen::VectorXd& b);
void logistic_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                       Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b);

}  // namespace cln
