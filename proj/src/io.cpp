#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cln/errors.hpp"
#include "cln/harness.hpp"

namespace cln {

std::string metrics_header() {
  return "method,alpha,rep,label,coverage,avg_size,n_cal,seed\n";
}

std::string format_rows(const std::vector<CoverageRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  for (const auto& r : rows) {
    out << r.method << "," << r.alpha << "," << r.rep << "," << r.label << ","
        << r.coverage << "," << r.avg_size << "," << r.n_cal << "," << r.seed
        << "\n";
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

IngestResult ingest_scores(const std::string& path, bool scores_flag,
                           bool renormalize) {
  std::ifstream in(path);
  if (!in) throw SchemaMismatch("cannot open score file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("empty score file");
  if (!line.empty() && line.back() == '\r') {
    throw SchemaMismatch("score files must use LF line endings");
  }
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "y_noisy" ||
      header[2] != "y_true") {
    throw SchemaMismatch(
        "expected header id,y_noisy,y_true,p0,... (or s0,... with --scores)");
  }
  const int K = static_cast<int>(header.size()) - 3;
  const std::string prefix = scores_flag ? "s" : "p";
  for (int k = 0; k < K; ++k) {
    if (header[static_cast<std::size_t>(k) + 3] != prefix + std::to_string(k)) {
      throw SchemaMismatch("value column " + std::to_string(k) +
                           " should be named " + prefix + std::to_string(k));
    }
  }

  IngestResult out;
  out.K = K;
  out.is_scores = scores_flag;
  std::vector<std::array<double, 1>> dummy;
  std::vector<std::vector<double>> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.back() == '\r') {
      throw SchemaMismatch("score files must use LF line endings (line " +
                           std::to_string(lineno) + ")");
    }
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != K + 3) {
      throw SchemaMismatch("line " + std::to_string(lineno) + " has " +
                           std::to_string(fields.size()) +
                           " columns, expected " + std::to_string(K + 3));
    }
    try {
      out.ids.push_back(std::stoll(fields[0]));
      const int yn = std::stoi(fields[1]);
      const int yt = std::stoi(fields[2]);
      if (yn < 0 || yn >= K) {
        throw BadLabel("line " + std::to_string(lineno) +
                       ": y_noisy out of range");
      }
      if (yt < -1 || yt >= K) {
        throw BadLabel("line " + std::to_string(lineno) +
                       ": y_true out of range");
      }
      out.y_noisy.push_back(yn);
      out.y_true.push_back(yt);
      std::vector<double> row(static_cast<std::size_t>(K));
      double sum = 0.0;
      for (int k = 0; k < K; ++k) {
        row[static_cast<std::size_t>(k)] =
            std::stod(fields[static_cast<std::size_t>(k) + 3]);
        sum += row[static_cast<std::size_t>(k)];
      }
      if (!scores_flag) {
        if (std::abs(sum - 1.0) > 1e-6) {
          if (!renormalize) {
            throw NonNormalizedRow("line " + std::to_string(lineno) +
                                   ": probabilities sum to " +
                                   std::to_string(sum) +
                                   " (use --renormalize to accept)");
          }
          for (auto& v : row) v /= sum;
        }
      }
      values.push_back(std::move(row));
    } catch (const std::invalid_argument&) {
      throw SchemaMismatch("line " + std::to_string(lineno) +
                           ": cannot parse numeric field");
    }
  }
  const int n = static_cast<int>(values.size());
  out.values.resize(n, K);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      out.values(i, k) = values[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(k)];
    }
  }
  out.has_clean_labels =
      !out.y_true.empty() &&
      std::all_of(out.y_true.begin(), out.y_true.end(),
                  [](int y) { return y >= 0; });
  return out;
}

std::string format_thresholds(const Thresholds& tau, const std::string& method,
                              double alpha,
                              const std::vector<double>& delta_terms) {
  std::ostringstream out;
  out.precision(17);
  out << "label,tau,method,alpha,delta_const\n";
  for (Eigen::Index k = 0; k < tau.tau.size(); ++k) {
    const double d =
        delta_terms.empty() ? 0.0 : delta_terms[static_cast<std::size_t>(k)];
    out << k << "," << tau.tau[k] << "," << method << "," << alpha << "," << d
        << "\n";
  }
  return out.str();
}

std::string format_marginal_threshold(double tau, const std::string& method,
                                      double alpha, double delta_term) {
  std::ostringstream out;
  out.precision(17);
  out << "label,tau,method,alpha,delta_const\n";
  out << -1 << "," << tau << "," << method << "," << alpha << ","
      << delta_term << "\n";
  return out.str();
}

Thresholds parse_thresholds(std::istream& in, int K) {
  std::string line;
  if (!std::getline(in, line) || split_csv(line).empty() ||
      split_csv(line)[0] != "label") {
    throw SchemaMismatch("threshold file must start with its header line");
  }
  Eigen::VectorXd tau = Eigen::VectorXd::Constant(K, -1.0);
  bool marginal = false;
  double marginal_tau = 1.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2) throw SchemaMismatch("bad threshold row: " + line);
    const int label = std::stoi(fields[0]);
    const double value = std::stod(fields[1]);
    if (label == -1) {
      marginal = true;
      marginal_tau = value;
    } else if (label >= 0 && label < K) {
      tau[label] = value;
    } else {
      throw BadLabel("threshold row references label " + std::to_string(label));
    }
  }
  if (marginal) return Thresholds::uniform(K, marginal_tau);
  for (int k = 0; k < K; ++k) {
    if (tau[k] < 0.0) {
      throw SchemaMismatch("threshold file is missing label " +
                           std::to_string(k));
    }
  }
  return Thresholds(tau);
}

}  // namespace cln
