#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cln/contamination.hpp"
#include "cln/scores.hpp"

namespace cln {

// One calibration method requested from the harness. `optimistic` maps the
// trailing '+' of the method name.
enum class MethodKind {
  StandardLC,
  StandardMarg,
  Adaptive,
  AdaptiveCI,
  AdaptiveMarg,
  AdaptiveCC,
};

struct Method {
  MethodKind kind;
  bool optimistic = false;
  std::string name;  // as written in the config, e.g. "adaptive+"
};

Method parse_method(const std::string& name);

// Flat key=value experiment description. Unknown keys are errors; the full
// key reference lives in the README.
struct ExperimentConfig {
  // data spec
  std::string generator = "logistic";  // hypercube | logistic | tree
  int n_train = 0;
  int n_cal = 1000;
  int n_test = 1000;
  int K = 4;
  int d = 50;
  // noise spec
  std::string noise = "rr";  // rr | two-level-rr | block | random-u | file
  double epsilon = 0.1;
  double nu = 0.0;
  std::string transition_file;
  // probability model and scores
  std::string model = "oracle";  // oracle | logistic
  int epochs = 200;
  double lr = 1.0;
  std::string score = "hps";  // hps | aps | aps-randomized
  double jitter = 1e-6;
  // calibration
  std::vector<Method> methods;
  double alpha = 0.1;
  double alpha_v = 0.01;
  double gamma = 0.1;
  // bounded-noise region: either a known interval for epsilon (and nu), or a
  // fit from n_clean clean samples
  std::optional<double> eps_low;
  std::optional<double> eps_upp;
  std::optional<double> nu_low;
  std::optional<double> nu_upp;
  int n_clean = 0;
  int n_noisy_fit = 0;  // defaults to 10 * n_clean when left at 0
  int bootstrap = 1000;
  double eps_bar = 0.25;
  // run control
  int reps = 1;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  int ctable_reps = 10000;

  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

// Per-(method, rep) coverage summary used to assemble the metrics table.
struct CoverageRow {
  std::string method;
  double alpha;
  int rep;
  int label;  // -1 encodes the marginal row
  double coverage;
  double avg_size;
  int n_cal;
  std::uint64_t seed;
};

struct EvalResult {
  double marginal_coverage = 0.0;
  double marginal_size = 0.0;
  Eigen::VectorXd label_coverage;
  Eigen::VectorXd label_size;
  Eigen::VectorXi label_counts;
};

// Empirical coverage and set sizes of per-test prediction sets against the
// true labels, overall and within each true-label stratum.
EvalResult evaluate(const std::vector<std::vector<int>>& sets,
                    const std::vector<int>& y_true, int K);

// Runs the full simulate pipeline; rows appear in repetition order with the
// marginal row first within each (method, rep).
std::vector<CoverageRow> run_experiment(const ExperimentConfig& config);

std::string metrics_header();
std::string format_rows(const std::vector<CoverageRow>& rows);

// ---------------------------------------------------------------------------
// Score file ingestion (schema: id,y_noisy,y_true,p0,...,p{K-1}).
// ---------------------------------------------------------------------------

struct IngestResult {
  int K = 0;
  bool is_scores = false;       // true when the file carried s columns
  Eigen::MatrixXd values;       // probabilities or scores, n x K
  std::vector<int> y_noisy;
  std::vector<int> y_true;      // -1 where unknown
  bool has_clean_labels = false;
  std::vector<long long> ids;
};

IngestResult ingest_scores(const std::string& path, bool scores_flag,
                           bool renormalize);

// Threshold tables written by `calibrate` and read back by `predict`
// (label,tau,method,alpha,delta_const; label -1 is the marginal scalar).
std::string format_thresholds(const Thresholds& tau, const std::string& method,
                              double alpha,
                              const std::vector<double>& delta_terms);
std::string format_marginal_threshold(double tau, const std::string& method,
                                      double alpha, double delta_term);
Thresholds parse_thresholds(std::istream& in, int K);

}  // namespace cln
