#include "cln/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cln/errors.hpp"

namespace cln {

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::HPS: return "hps";
    case ScoreKind::APS: return "aps";
    case ScoreKind::APSRandomized: return "aps-randomized";
  }
  return "hps";
}

ScoreKind parse_score_kind(const std::string& name) {
  if (name == "hps") return ScoreKind::HPS;
  if (name == "aps") return ScoreKind::APS;
  if (name == "aps-randomized") return ScoreKind::APSRandomized;
  throw ConfigError("unknown score kind: " + name);
}

void validate_probabilities(const Eigen::MatrixXd& probs) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(i, k);
      if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) {
        throw InvalidProbabilities("probability outside [0,1] at row " +
                                   std::to_string(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidProbabilities("row " + std::to_string(i) + " sums to " +
                                 std::to_string(sum));
    }
  }
}

namespace {

void apply_jitter(Eigen::MatrixXd& s, double jitter, Rng& rng) {
  if (jitter == 0.0) return;
  if (jitter < 0.0) throw InvalidProbabilities("jitter must be >= 0");
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      s(i, k) = std::clamp(s(i, k) + jitter * unif(rng), 0.0, 1.0);
    }
  }
}

}  // namespace

ScoreMatrix hps_scores(const Eigen::MatrixXd& probs, double jitter, Rng& rng) {
  validate_probabilities(probs);
  ScoreMatrix out;
  out.kind = ScoreKind::HPS;
  out.jitter = jitter;
  out.s = 1.0 - probs.array();
  apply_jitter(out.s, jitter, rng);
  return out;
}

ScoreMatrix aps_scores(const Eigen::MatrixXd& probs, bool randomized, Rng& rng,
                       double jitter) {
  validate_probabilities(probs);
  const int n = static_cast<int>(probs.rows());
  const int K = static_cast<int>(probs.cols());
  ScoreMatrix out;
  out.kind = randomized ? ScoreKind::APSRandomized : ScoreKind::APS;
  out.jitter = jitter;
  out.s.resize(n, K);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> order(K);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return probs(i, a) > probs(i, b);
    });
    double cum = 0.0;
    for (int r = 0; r < K; ++r) {
      cum += probs(i, order[r]);
      out.s(i, order[r]) = std::min(cum, 1.0);
    }
    if (randomized) {
      const double u = unif(rng);
      for (int k = 0; k < K; ++k) {
        out.s(i, k) -= u * probs(i, k);
      }
    }
  }
  apply_jitter(out.s, jitter, rng);
  return out;
}

std::vector<int> prediction_set(const Eigen::VectorXd& score_row,
                                const Thresholds& tau) {
  if (score_row.size() != tau.tau.size()) {
    throw DimensionMismatch("score row has " + std::to_string(score_row.size()) +
                            " labels, thresholds have " +
                            std::to_string(tau.tau.size()));
  }
  std::vector<int> out;
  for (Eigen::Index k = 0; k < score_row.size(); ++k) {
    if (score_row[k] <= tau.tau[k]) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<std::vector<int>> prediction_sets(const ScoreMatrix& scores,
                                              const Thresholds& tau) {
  std::vector<std::vector<int>> out;
  out.reserve(scores.rows());
  for (int i = 0; i < scores.rows(); ++i) {
    out.push_back(prediction_set(scores.s.row(i), tau));
  }
  return out;
}

}  // namespace cln
