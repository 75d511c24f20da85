#include "cln/ctable.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cln/errors.hpp"

namespace cln {

double monte_carlo_c(int n, int reps, Rng& rng) {
  if (n < 1 || reps < 1) {
    throw BadDimensions("monte_carlo_c requires n >= 1 and reps >= 1");
  }
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> gaps(static_cast<std::size_t>(n) + 1);
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) {
    double total = 0.0;
    for (auto& g : gaps) {
      g = expo(rng);
      total += g;
    }
    // U_(i) = (E_1 + ... + E_i) / (E_1 + ... + E_{n+1}) are sorted uniforms.
    double cum = 0.0;
    double sup = -1.0;
    for (int i = 1; i <= n; ++i) {
      cum += gaps[static_cast<std::size_t>(i) - 1];
      sup = std::max(sup, static_cast<double>(i) / n - cum / total);
    }
    acc += sup;
  }
  return acc / reps;
}

double CTable::c(int n) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
  }
  // Each n gets its own derived stream so the cached value does not depend
  // on the order in which sizes are first requested.
  Rng rng = make_rng(seed_, static_cast<std::uint64_t>(n), "ctable");
  const double value = monte_carlo_c(n, reps_, rng);
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(n, value);
  return it->second;
}

void CTable::precompute(const std::vector<int>& ns) {
  for (int n : ns) c(n);
}

}  // namespace cln
