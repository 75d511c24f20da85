#include "cln/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "cln/errors.hpp"

namespace cln {

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u <= acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

ProbabilityModel ProbabilityModel::mixture_oracle(Eigen::MatrixXd cluster_means,
                                                  std::vector<int> cluster_class,
                                                  int num_classes) {
  ProbabilityModel model;
  model.kind_ = Kind::MixtureOracle;
  model.num_classes_ = num_classes;
  model.means_ = std::move(cluster_means);
  model.cluster_class_ = std::move(cluster_class);
  return model;
}

ProbabilityModel ProbabilityModel::softmax_oracle(Eigen::MatrixXd W) {
  ProbabilityModel model;
  model.kind_ = Kind::SoftmaxOracle;
  model.num_classes_ = static_cast<int>(W.cols());
  model.W_ = std::move(W);
  model.b_ = Eigen::VectorXd::Zero(model.num_classes_);
  return model;
}

ProbabilityModel ProbabilityModel::logistic(Eigen::MatrixXd W,
                                            Eigen::VectorXd b) {
  ProbabilityModel model;
  model.kind_ = Kind::Logistic;
  model.num_classes_ = static_cast<int>(W.cols());
  model.W_ = std::move(W);
  model.b_ = std::move(b);
  return model;
}

Eigen::MatrixXd ProbabilityModel::predict(const Eigen::MatrixXd& X) const {
  const int n = static_cast<int>(X.rows());
  switch (kind_) {
    case Kind::MixtureOracle: {
      const int m = static_cast<int>(means_.rows());
      const int d_inf = static_cast<int>(means_.cols());
      // Unnormalized log density of each unit-variance cluster; the noise
      // coordinates share the same distribution across clusters and cancel.
      Eigen::MatrixXd logw(n, m);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < m; ++c) {
          double d2 = 0.0;
          for (int j = 0; j < d_inf; ++j) {
            const double diff = X(i, j) - means_(c, j);
            d2 += diff * diff;
          }
          logw(i, c) = -0.5 * d2;
        }
      }
      Eigen::MatrixXd w = softmax_rows(std::move(logw));
      Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n, num_classes_);
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < m; ++c) {
          probs(i, cluster_class_[static_cast<std::size_t>(c)]) += w(i, c);
        }
      }
      return probs;
    }
    case Kind::SoftmaxOracle:
    case Kind::Logistic: {
      Eigen::MatrixXd logits = X * W_;
      logits.rowwise() += b_.transpose();
      return softmax_rows(std::move(logits));
    }
  }
  return Eigen::MatrixXd();
}

GeneratedData gen_hypercube_mixture(int n, int K, int d, std::uint64_t seed,
                                    int informative) {
  if (n < 1 || K < 2 || d < 1) throw BadDimensions("need n >= 1, K >= 2, d >= 1");
  informative = std::min(informative, d);
  // Need 2K distinct hypercube vertices in the informative coordinates.
  if (informative < 1 ||
      (informative < 30 && (1 << informative) < 2 * K)) {
    throw BadDimensions("too few informative dimensions for 2K clusters");
  }
  Rng rng(splitmix64(seed));
  std::uniform_int_distribution<int> coin(0, 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int m = 2 * K;
  Eigen::MatrixXd means(m, informative);
  std::vector<std::vector<int>> used;
  for (int c = 0; c < m; ++c) {
    std::vector<int> vertex(static_cast<std::size_t>(informative));
    do {
      for (auto& v : vertex) v = coin(rng);
    } while (std::find(used.begin(), used.end(), vertex) != used.end());
    used.push_back(vertex);
    for (int j = 0; j < informative; ++j) {
      means(c, j) = vertex[static_cast<std::size_t>(j)] == 1 ? 1.0 : -1.0;
    }
  }
  // Two clusters per class, shuffled so the assignment is random but equal.
  std::vector<int> cluster_class(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) cluster_class[static_cast<std::size_t>(c)] = c % K;
  std::shuffle(cluster_class.begin(), cluster_class.end(), rng);

  GeneratedData out;
  out.data.X.resize(n, d);
  out.data.y.resize(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> pick_cluster(0, m - 1);
  for (int i = 0; i < n; ++i) {
    const int c = pick_cluster(rng);
    out.data.y[static_cast<std::size_t>(i)] =
        cluster_class[static_cast<std::size_t>(c)];
    for (int j = 0; j < d; ++j) {
      const double mu = j < informative ? means(c, j) : 0.0;
      out.data.X(i, j) = mu + normal(rng);
    }
  }
  out.oracle = ProbabilityModel::mixture_oracle(means, cluster_class, K);
  return out;
}

GeneratedData gen_logistic(int n, int K, int d, std::uint64_t seed) {
  if (n < 1 || K < 2 || d < 1) throw BadDimensions("need n >= 1, K >= 2, d >= 1");
  Rng rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd W(d, K);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < K; ++k) W(j, k) = normal(rng);
  }
  GeneratedData out;
  out.data.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) out.data.X(i, j) = normal(rng);
  }
  out.oracle = ProbabilityModel::softmax_oracle(W);
  Eigen::MatrixXd probs = out.oracle.predict(out.data.X);
  out.data.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.data.y[static_cast<std::size_t>(i)] =
        sample_categorical(probs.row(i), rng);
  }
  return out;
}

TreeSpec TreeSpec::default_spec() {
  // Non-canonical defaults: leaves alternate between near-deterministic and
  // diffuse label distributions to keep Y | X heteroscedastic.
  TreeSpec spec;
  spec.leaf_probs.resize(32);
  const std::array<std::array<double, 4>, 4> bases = {{
      {0.85, 0.05, 0.05, 0.05},
      {0.40, 0.40, 0.10, 0.10},
      {0.25, 0.25, 0.25, 0.25},
      {0.05, 0.05, 0.05, 0.85},
  }};
  for (int leaf = 0; leaf < 32; ++leaf) {
    auto base = bases[static_cast<std::size_t>(leaf % 4)];
    std::rotate(base.begin(), base.begin() + (leaf / 4) % 4, base.end());
    spec.leaf_probs[static_cast<std::size_t>(leaf)] = base;
  }
  return spec;
}

GeneratedData gen_tree(int n, int d, std::uint64_t seed, const TreeSpec& spec) {
  if (n < 1 || d < 4) throw BadDimensions("tree generator needs d >= 4");
  if (spec.leaf_probs.size() != 32) {
    throw BadDimensions("tree spec must provide 32 leaf distributions");
  }
  for (const auto& row : spec.leaf_probs) {
    const double sum = row[0] + row[1] + row[2] + row[3];
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidProbabilities("tree leaf distribution does not sum to 1");
    }
  }
  Rng rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> x4(1, 4);
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneratedData out;
  out.data.X.resize(n, d);
  out.data.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x1 = unif(rng) < 0.75 ? 1.0 : -1.0;
    const double x2 = unif(rng) < 0.75 ? 1.0 : -2.0;
    const double x3 = unif(rng) < 0.25 ? 1.0 : -2.0;
    const int x4v = x4(rng);
    out.data.X(i, 0) = x1;
    out.data.X(i, 1) = x2;
    out.data.X(i, 2) = x3;
    out.data.X(i, 3) = x4v;
    for (int j = 4; j < d; ++j) out.data.X(i, j) = normal(rng);
    const int leaf = (x1 > 0 ? 16 : 0) + (x2 > 0 ? 8 : 0) + (x3 > 0 ? 4 : 0) +
                     (x4v - 1);
    const auto& p = spec.leaf_probs[static_cast<std::size_t>(leaf)];
    Eigen::VectorXd pv(4);
    pv << p[0], p[1], p[2], p[3];
    out.data.y[static_cast<std::size_t>(i)] = sample_categorical(pv, rng);
  }
  // No closed-form oracle is attached; callers train a classifier instead.
  out.oracle = ProbabilityModel::logistic(Eigen::MatrixXd::Zero(d, 4),
                                          Eigen::VectorXd::Zero(4));
  return out;
}

double logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd logits = X * W;
  logits.rowwise() += b.transpose();
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    loss += lse - logits(i, y[static_cast<std::size_t>(i)]);
  }
  return loss / n;
}

void logistic_gradient(const Eigen::MatrixXd& X, const std::vector<int>& y,
                       const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                       Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd logits = X * W;
  logits.rowwise() += b.transpose();
  Eigen::MatrixXd probs = softmax_rows(std::move(logits));
  for (int i = 0; i < n; ++i) {
    probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  }
  grad_W = X.transpose() * probs / n;
  grad_b = probs.colwise().sum().transpose() / n;
}

ProbabilityModel train_logistic(const Eigen::MatrixXd& X,
                                const std::vector<int>& y, int K, int epochs,
                                double lr, std::uint64_t seed) {
  (void)seed;  // full-batch descent from zero weights is already deterministic
  const int n = static_cast<int>(X.rows());
  if (n == 0) throw EmptyTrainingSet("training set is empty");
  if (static_cast<int>(y.size()) != n) {
    throw DimensionMismatch("label vector and feature matrix sizes differ");
  }
  for (int label : y) {
    if (label < 0 || label >= K) {
      throw LabelOutOfRange("training label out of range");
    }
  }
  const int d = static_cast<int>(X.cols());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd grad_W;
  Eigen::VectorXd grad_b;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    logistic_gradient(X, y, W, b, grad_W, grad_b);
    W -= lr * grad_W;
    b -= lr * grad_b;
  }
  return ProbabilityModel::logistic(std::move(W), std::move(b));
}

}  // namespace cln
