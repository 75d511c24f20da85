#pragma once

#include <vector>

#include "cln/scores.hpp"

namespace cln {

// Right-continuous empirical CDF over a sorted sample.
class Ecdf {
 public:
  Ecdf() = default;
  explicit Ecdf(std::vector<double> values);

  // Fraction of the sample <= t.
  double operator()(double t) const;
  int size() const { return static_cast<int>(sorted_.size()); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// The family of per-group score distributions used by all adaptive
// calibrations: F(l, k, t) is the empirical CDF of {s(X_i, k) : y_noisy_i = l}.
class EcdfFamily {
 public:
  EcdfFamily(const ScoreMatrix& scores, const std::vector<int>& y_noisy, int K);

  int num_labels() const { return K_; }
  int group_size(int l) const { return counts_[l]; }
  // min_l n_l, the rate that drives the DKW correction terms.
  int min_group_size() const { return n_star_; }
  int total() const { return total_; }

  double F(int l, int k, double t) const { return ecdf_[l][k](t); }
  // Sorted scores of group k evaluated at column k: the order statistics
  // S^k_(1) <= ... <= S^k_(n_k) that candidate thresholds are drawn from.
  const std::vector<double>& group_scores(int k) const {
    return ecdf_[k][k].sorted();
  }

 private:
  int K_ = 0;
  int n_star_ = 0;
  int total_ = 0;
  std::vector<int> counts_;
  std::vector<std::vector<Ecdf>> ecdf_;  // [group l][score column k]
};

}  // namespace cln
