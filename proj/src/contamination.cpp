#include "cln/contamination.hpp"

#include <Eigen/LU>
#include <cmath>
#include <istream>
#include <sstream>

#include "cln/errors.hpp"

namespace cln {

namespace {

constexpr double kMaxConditionNumber = 1e10;

void check_rho(const Eigen::VectorXd& rho, int K) {
  if (rho.size() != K) {
    throw DimensionMismatch("rho has size " + std::to_string(rho.size()) +
                            ", expected " + std::to_string(K));
  }
  for (int k = 0; k < K; ++k) {
    if (!(rho[k] > 0.0)) {
      throw NonPositiveFrequency("rho[" + std::to_string(k) + "] = " +
                                 std::to_string(rho[k]) + " must be > 0");
    }
  }
  if (std::abs(rho.sum() - 1.0) > 1e-8) {
    throw NonPositiveFrequency("rho must sum to 1, got " +
                               std::to_string(rho.sum()));
  }
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw EpsilonOutOfRange("epsilon = " + std::to_string(epsilon) +
                            " must lie in [0, 1)");
  }
}

// Completes a model from (T, rho): rho_tilde = T * rho, M by Bayes' rule,
// V by LU inversion with a condition-number guard.
ContaminationModel finish(ContaminationModel model) {
  const int K = model.K;
  model.rho_tilde = model.T * model.rho;
  for (int k = 0; k < K; ++k) {
    if (!(model.rho_tilde[k] > 0.0)) {
      throw NonPositiveFrequency("contaminated frequency of label " +
                                 std::to_string(k) + " is not positive");
    }
  }
  model.M.resize(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      model.M(k, l) = model.T(k, l) * model.rho[l] / model.rho_tilde[k];
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(model.M);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxConditionNumber)) {
    throw SingularM("mixture matrix M is singular or ill-conditioned "
                    "(estimated condition number exceeds 1e10)");
  }
  model.V = lu.inverse();
  return model;
}

}  // namespace

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::General: return "general";
    case NoiseKind::RR: return "rr";
    case NoiseKind::TwoLevelRR: return "two-level-rr";
    case NoiseKind::BlockDiag: return "block";
    case NoiseKind::RandomU: return "random-u";
  }
  return "general";
}

double ContaminationModel::off_diag_abs_sum(int k) const {
  double s = 0.0;
  for (int l = 0; l < K; ++l) {
    if (l != k) s += std::abs(V(k, l));
  }
  return s;
}

std::string ContaminationModel::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "K=" << K << "\n";
  out << "kind=" << to_string(kind) << "\n";
  out << "epsilon=" << epsilon << "\n";
  out << "nu=" << nu << "\n";
  out << "seed=" << seed << "\n";
  out << "T=";
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (k + l > 0) out << ",";
      out << T(k, l);
    }
  }
  out << "\nrho=";
  for (int k = 0; k < K; ++k) {
    if (k > 0) out << ",";
    out << rho[k];
  }
  out << "\n";
  return out.str();
}

BlockStructure::BlockStructure(int K_) : K(K_) {
  if (K < 2 || K % 2 != 0) {
    throw OddK("block structure requires an even K >= 2, got " +
               std::to_string(K));
  }
}

std::vector<int> BlockStructure::block(int which) const {
  std::vector<int> out;
  for (int k = which * K / 2; k < (which + 1) * K / 2; ++k) out.push_back(k);
  return out;
}

ContaminationModel build_rr(int K, double epsilon, const Eigen::VectorXd& rho) {
  if (K < 2) throw BadDimensions("K must be >= 2");
  check_epsilon(epsilon);
  check_rho(rho, K);
  ContaminationModel model;
  model.K = K;
  model.kind = NoiseKind::RR;
  model.epsilon = epsilon;
  model.rho = rho;
  model.T = Eigen::MatrixXd::Constant(K, K, epsilon / K);
  model.T.diagonal().array() += 1.0 - epsilon;
  return finish(std::move(model));
}

ContaminationModel build_rr_uniform(int K, double epsilon) {
  return build_rr(K, epsilon, Eigen::VectorXd::Constant(K, 1.0 / K));
}

ContaminationModel build_two_level_rr(int K, double epsilon, double nu) {
  if (K < 2 || K % 2 != 0) {
    throw OddK("two-level randomized response requires an even K, got " +
               std::to_string(K));
  }
  check_epsilon(epsilon);
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw NuOutOfRange("nu = " + std::to_string(nu) + " must lie in [0, 1]");
  }
  BlockStructure blocks(K);
  ContaminationModel model;
  model.K = K;
  model.kind = NoiseKind::TwoLevelRR;
  model.epsilon = epsilon;
  model.nu = nu;
  model.rho = Eigen::VectorXd::Constant(K, 1.0 / K);
  model.T.resize(K, K);
  const double within = epsilon * (1.0 + nu) / K;
  const double cross = epsilon * (1.0 - nu) / K;
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      if (k == l) {
        model.T(k, l) = 1.0 - epsilon + within;
      } else if (blocks.same_block(k, l)) {
        model.T(k, l) = within;
      } else {
        model.T(k, l) = cross;
      }
    }
  }
  return finish(std::move(model));
}

ContaminationModel build_from_transition(const Eigen::MatrixXd& T,
                                         const Eigen::VectorXd& rho) {
  const int K = static_cast<int>(T.rows());
  if (T.cols() != K || K < 2) {
    throw BadDimensions("transition matrix must be square with K >= 2");
  }
  check_rho(rho, K);
  for (int l = 0; l < K; ++l) {
    double col = 0.0;
    for (int k = 0; k < K; ++k) {
      if (T(k, l) < -1e-12 || T(k, l) > 1.0 + 1e-12) {
        throw NotColumnStochastic("T(" + std::to_string(k) + "," +
                                  std::to_string(l) + ") outside [0, 1]");
      }
      col += T(k, l);
    }
    if (std::abs(col - 1.0) > 1e-8) {
      throw NotColumnStochastic("column " + std::to_string(l) +
                                " of T sums to " + std::to_string(col));
    }
  }
  ContaminationModel model;
  model.K = K;
  model.kind = NoiseKind::General;
  model.rho = rho;
  model.T = T;
  return finish(std::move(model));
}

ContaminationModel build_block_diag(int K, double epsilon) {
  if (K < 2 || K % 2 != 0) {
    throw OddK("block-diagonal contamination requires an even K, got " +
               std::to_string(K));
  }
  check_epsilon(epsilon);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(K, K);
  for (int b = 0; b < K / 2; ++b) {
    for (int k = 2 * b; k < 2 * b + 2; ++k) {
      for (int l = 2 * b; l < 2 * b + 2; ++l) {
        T(k, l) = epsilon / 2.0;
      }
    }
  }
  T.diagonal().array() += 1.0 - epsilon;
  ContaminationModel model =
      build_from_transition(T, Eigen::VectorXd::Constant(K, 1.0 / K));
  model.kind = NoiseKind::BlockDiag;
  model.epsilon = epsilon;
  return model;
}

ContaminationModel build_random_u(int K, double epsilon, std::uint64_t seed) {
  if (K < 2) throw BadDimensions("K must be >= 2");
  check_epsilon(epsilon);
  Rng rng(splitmix64(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd U(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      U(k, l) = unif(rng);
    }
  }
  for (int l = 0; l < K; ++l) {
    U.col(l) /= U.col(l).sum();
  }
  Eigen::MatrixXd T = (1.0 - epsilon) * Eigen::MatrixXd::Identity(K, K) +
                      epsilon * U;
  ContaminationModel model =
      build_from_transition(T, Eigen::VectorXd::Constant(K, 1.0 / K));
  model.kind = NoiseKind::RandomU;
  model.epsilon = epsilon;
  model.seed = seed;
  return model;
}

double rr_v_diag(int K, double epsilon, const Eigen::VectorXd& rho_tilde, int k) {
  return rho_tilde[k] / (rho_tilde[k] - epsilon / K);
}

double rr_v_off(int K, double epsilon, const Eigen::VectorXd& rho_tilde, int k,
                int l) {
  return -(epsilon / K) * rho_tilde[l] / (rho_tilde[k] - epsilon / K);
}

double two_level_rr_v_diag(int K, double epsilon, double nu) {
  return (1.0 - epsilon / K) / (1.0 - epsilon) -
         epsilon * nu / (K * (1.0 - epsilon) * (1.0 - epsilon * (1.0 - nu)));
}

double two_level_rr_v_within(int K, double epsilon, double nu) {
  return -epsilon / (K * (1.0 - epsilon)) *
         (1.0 + nu / (1.0 - epsilon * (1.0 - nu)));
}

double two_level_rr_v_cross(int K, double epsilon, double nu) {
  return -epsilon / (K * (1.0 - epsilon)) *
         (1.0 - nu / (1.0 - epsilon * (1.0 - nu)));
}

std::vector<int> corrupt_labels(const std::vector<int>& y,
                                const ContaminationModel& model, Rng& rng) {
  std::vector<int> out(y.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int label = y[i];
    if (label < 0 || label >= model.K) {
      throw LabelOutOfRange("label " + std::to_string(label) +
                            " outside [0, " + std::to_string(model.K) + ")");
    }
    // Inverse-CDF draw from column `label` of T.
    double u = unif(rng);
    int drawn = model.K - 1;
    double acc = 0.0;
    for (int k = 0; k < model.K; ++k) {
      acc += model.T(k, label);
      if (u <= acc) {
        drawn = k;
        break;
      }
    }
    out[i] = drawn;
  }
  return out;
}

ContaminationModel parse_model(std::istream& in) {
  int K = -1;
  std::string kind_str = "general";
  double epsilon = 0.0, nu = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> t_entries, rho_entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw SchemaMismatch("expected key=value in model block, got: " + line);
    }
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    auto parse_list = [](const std::string& v) {
      std::vector<double> out;
      std::stringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
      return out;
    };
    if (key == "K") K = std::stoi(value);
    else if (key == "kind") kind_str = value;
    else if (key == "epsilon") epsilon = std::stod(value);
    else if (key == "nu") nu = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "T") t_entries = parse_list(value);
    else if (key == "rho") rho_entries = parse_list(value);
    else throw SchemaMismatch("unknown model key: " + key);
  }
  if (K < 2) throw SchemaMismatch("model block is missing K");
  if (static_cast<int>(t_entries.size()) != K * K) {
    throw SchemaMismatch("model block has " + std::to_string(t_entries.size()) +
                         " T entries, expected " + std::to_string(K * K));
  }
  Eigen::VectorXd rho = Eigen::VectorXd::Constant(K, 1.0 / K);
  if (!rho_entries.empty()) {
    if (static_cast<int>(rho_entries.size()) != K) {
      throw SchemaMismatch("model block rho has wrong length");
    }
    for (int k = 0; k < K; ++k) rho[k] = rho_entries[k];
  }
  Eigen::MatrixXd T(K, K);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      T(k, l) = t_entries[static_cast<std::size_t>(k) * K + l];
    }
  }
  ContaminationModel model = build_from_transition(T, rho);
  if (kind_str == "rr") model.kind = NoiseKind::RR;
  else if (kind_str == "two-level-rr") model.kind = NoiseKind::TwoLevelRR;
  else if (kind_str == "block") model.kind = NoiseKind::BlockDiag;
  else if (kind_str == "random-u") model.kind = NoiseKind::RandomU;
  model.epsilon = epsilon;
  model.nu = nu;
  model.seed = seed;
  return model;
}

}  // namespace cln
