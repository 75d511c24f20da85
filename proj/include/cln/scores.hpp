#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cln/rng.hpp"

namespace cln {

enum class ScoreKind { HPS, APS, APSRandomized };

std::string to_string(ScoreKind kind);
ScoreKind parse_score_kind(const std::string& name);

// Row-normalized class probability estimates pi(x_i, k). Throws
// InvalidProbabilities if entries leave [0,1] or a row sum is off by > 1e-9.
void validate_probabilities(const Eigen::MatrixXd& probs);

// Conformity scores s(x_i, k) in [0,1]; smaller means label k is more
// plausible for x_i.
struct ScoreMatrix {
  Eigen::MatrixXd s;
  ScoreKind kind = ScoreKind::HPS;
  double jitter = 0.0;

  int rows() const { return static_cast<int>(s.rows()); }
  int num_labels() const { return static_cast<int>(s.cols()); }
};

// Per-label thresholds tau in [0,1]^K defining the prediction sets
// {k : s(x,k) <= tau_k}. A scalar threshold broadcasts across labels.
struct Thresholds {
  Eigen::VectorXd tau;

  Thresholds() = default;
  explicit Thresholds(Eigen::VectorXd t) : tau(std::move(t)) {}
  static Thresholds uniform(int K, double value) {
    return Thresholds(Eigen::VectorXd::Constant(K, value));
  }
};

// Homogeneous scores s = 1 - pi, optionally perturbed by a uniform jitter of
// the given amplitude and clamped back to [0,1]. jitter = 0 is exact.
ScoreMatrix hps_scores(const Eigen::MatrixXd& probs, double jitter, Rng& rng);

// Generalized inverse quantile scores: the cumulative mass of the
// descending-sorted probabilities down to each label's rank. The randomized
// variant subtracts U * pi(x,k) with a single uniform U per row.
// Ties in the sort are broken by label index.
ScoreMatrix aps_scores(const Eigen::MatrixXd& probs, bool randomized, Rng& rng,
                       double jitter = 0.0);

// The labels k with score_row[k] <= tau_k.
std::vector<int> prediction_set(const Eigen::VectorXd& score_row,
                                const Thresholds& tau);

// All prediction sets for a score matrix.
std::vector<std::vector<int>> prediction_sets(const ScoreMatrix& scores,
                                              const Thresholds& tau);

}  // namespace cln
