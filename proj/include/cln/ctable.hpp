#pragma once

#include <cstdint>
#include <map>
#include <mutex>

#include "cln/rng.hpp"

namespace cln {

// Monte Carlo estimate of c(n) = E[ sup_i (i/n - U_(i)) ] over n iid
// uniforms. Sorted uniforms are generated directly from exponential
// spacings, so each replicate costs O(n).
double monte_carlo_c(int n, int reps, Rng& rng);

// Read-through cache of c(n) estimates keyed by n. Thread safe; repeated
// calibrations at the same group sizes reuse the cached values.
class CTable {
 public:
  explicit CTable(int reps = 10000, std::uint64_t seed = 20240901)
      : reps_(reps), seed_(seed) {}

  double c(int n);

  // Pre-populates the table (used by the ctable CLI subcommand).
  void precompute(const std::vector<int>& ns);

  int replicates() const { return reps_; }

 private:
  int reps_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<int, double> cache_;
};

}  // namespace cln
