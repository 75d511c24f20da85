#include "cln/ecdf.hpp"

#include <algorithm>

#include "cln/errors.hpp"

namespace cln {

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double t) const {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

EcdfFamily::EcdfFamily(const ScoreMatrix& scores,
                       const std::vector<int>& y_noisy, int K)
    : K_(K) {
  if (static_cast<int>(y_noisy.size()) != scores.rows()) {
    throw DimensionMismatch("label vector and score matrix sizes differ");
  }
  if (scores.num_labels() != K) {
    throw DimensionMismatch("score matrix has " +
                            std::to_string(scores.num_labels()) +
                            " columns, expected " + std::to_string(K));
  }
  total_ = scores.rows();
  counts_.assign(K, 0);
  std::vector<std::vector<int>> members(K);
  for (int i = 0; i < total_; ++i) {
    const int l = y_noisy[i];
    if (l < 0 || l >= K) {
      throw LabelOutOfRange("noisy label " + std::to_string(l) +
                            " outside [0, " + std::to_string(K) + ")");
    }
    members[l].push_back(i);
    ++counts_[l];
  }
  for (int l = 0; l < K; ++l) {
    if (counts_[l] == 0) {
      throw EmptyLabelClass("no calibration samples with noisy label " +
                            std::to_string(l));
    }
  }
  n_star_ = *std::min_element(counts_.begin(), counts_.end());
  ecdf_.resize(K);
  for (int l = 0; l < K; ++l) {
    ecdf_[l].resize(K);
    for (int k = 0; k < K; ++k) {
      std::vector<double> vals;
      vals.reserve(members[l].size());
      for (int i : members[l]) vals.push_back(scores.s(i, k));
      ecdf_[l][k] = Ecdf(std::move(vals));
    }
  }
}

}  // namespace cln
