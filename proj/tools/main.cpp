// Command-line front end: seeded Monte Carlo experiments, calibration of
// external score files, prediction-set construction, contamination-model
// fitting, and c(n) table precomputation.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cln/bounds.hpp"
#include "cln/calibration.hpp"
#include "cln/contamination.hpp"
#include "cln/errors.hpp"
#include "cln/estimation.hpp"
#include "cln/harness.hpp"

namespace {

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cln::ConfigError("cannot open output file: " + path);
  out << content;
}

struct NoiseFlags {
  std::string kind = "none";
  double epsilon = 0.0;
  double nu = 0.0;
  std::string transition_file;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--noise", kind,
                    "contamination model: none|rr|two-level-rr|block|random-u|file");
    cmd->add_option("--epsilon", epsilon, "noise level");
    cmd->add_option("--nu", nu, "two-level block parameter");
    cmd->add_option("--transition-file", transition_file,
                    "serialized model block for --noise file");
    cmd->add_option("--noise-seed", seed, "seed for --noise random-u");
  }

  cln::ContaminationModel build(int K) const {
    if (kind == "none" || kind == "rr") {
      return cln::build_rr_uniform(K, kind == "none" ? 0.0 : epsilon);
    }
    if (kind == "two-level-rr") return cln::build_two_level_rr(K, epsilon, nu);
    if (kind == "block") return cln::build_block_diag(K, epsilon);
    if (kind == "random-u") return cln::build_random_u(K, epsilon, seed);
    if (kind == "file") {
      std::ifstream in(transition_file);
      if (!in) throw cln::ConfigError("cannot open " + transition_file);
      return cln::parse_model(in);
    }
    throw cln::ConfigError("unknown --noise kind: " + kind);
  }
};

cln::ScoreMatrix scores_from_input(const cln::IngestResult& input,
                                   const std::string& score_kind,
                                   double jitter, std::uint64_t seed) {
  if (input.is_scores) {
    cln::ScoreMatrix s;
    s.s = input.values;
    s.kind = cln::ScoreKind::HPS;
    s.jitter = 0.0;
    return s;
  }
  cln::Rng rng = cln::make_rng(seed, 0, "cli-score");
  const cln::ScoreKind kind = cln::parse_score_kind(score_kind);
  if (kind == cln::ScoreKind::HPS) {
    return cln::hps_scores(input.values, jitter, rng);
  }
  return cln::aps_scores(input.values, kind == cln::ScoreKind::APSRandomized,
                         rng, jitter);
}

int run_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& provenance_path) {
  const cln::ExperimentConfig cfg = cln::parse_config_file(config_path);
  const auto rows = cln::run_experiment(cfg);
  write_output(out_path, cln::metrics_header() + cln::format_rows(rows));
  if (!provenance_path.empty()) {
    NoiseFlags flags;
    flags.kind = cfg.noise;
    flags.epsilon = cfg.epsilon;
    flags.nu = cfg.nu;
    flags.transition_file = cfg.transition_file;
    flags.seed = cln::derive_seed(cfg.seed, 0, "noise");
    write_output(provenance_path, flags.build(cfg.K).serialize());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal classification with contaminated calibration labels"};
  app.require_subcommand(1);

  // --- simulate -------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate",
                                      "run a seeded Monte Carlo experiment");
  std::string sim_config, sim_out, sim_prov;
  simulate->add_option("--config", sim_config, "experiment config file")
      ->required();
  simulate->add_option("--out", sim_out, "metrics output path (default stdout)");
  simulate->add_option("--provenance", sim_prov,
                       "write the serialized contamination model here");

  // --- calibrate ------------------------------------------------------
  auto* calibrate =
      app.add_subcommand("calibrate", "calibrate thresholds from a score file");
  std::string cal_input, cal_method = "standard-lc", cal_out;
  std::string cal_score_kind = "hps";
  bool cal_scores_flag = false, cal_renormalize = false;
  double cal_alpha = 0.1, cal_alpha_v = 0.01, cal_gamma = 0.1;
  double cal_jitter = 0.0;
  std::uint64_t cal_seed = 0;
  std::optional<double> cal_eps_low, cal_eps_upp, cal_nu_low, cal_nu_upp;
  double cal_eps_bar = 0.25;
  int cal_ctable_reps = 10000;
  NoiseFlags cal_noise;
  calibrate->add_option("input", cal_input, "score file (see README schema)")
      ->required();
  calibrate->add_flag("--scores", cal_scores_flag,
                      "input columns are conformity scores, not probabilities");
  calibrate->add_flag("--renormalize", cal_renormalize,
                      "renormalize probability rows that do not sum to one");
  calibrate->add_option("--method", cal_method,
                        "standard-lc|standard-marg|adaptive[+]|adaptive-ci[+]|"
                        "adaptive-marg[+]|adaptive-cc[+]");
  calibrate->add_option("--alpha", cal_alpha, "miscoverage level");
  calibrate->add_option("--alpha-v", cal_alpha_v, "noise region level");
  calibrate->add_option("--gamma", cal_gamma,
                        "calibration-conditional failure level");
  calibrate->add_option("--score-kind", cal_score_kind,
                        "hps|aps|aps-randomized (for probability inputs)");
  calibrate->add_option("--jitter", cal_jitter, "score jitter amplitude");
  calibrate->add_option("--seed", cal_seed, "seed for score randomization");
  calibrate->add_option("--eps-low", cal_eps_low,
                        "known lower bound for epsilon (adaptive-ci)");
  calibrate->add_option("--eps-upp", cal_eps_upp,
                        "known upper bound for epsilon (adaptive-ci)");
  calibrate->add_option("--nu-low", cal_nu_low, "known lower bound for nu");
  calibrate->add_option("--nu-upp", cal_nu_upp, "known upper bound for nu");
  calibrate->add_option("--eps-bar", cal_eps_bar, "a-priori epsilon bound");
  calibrate->add_option("--ctable-reps", cal_ctable_reps,
                        "Monte Carlo replicates for c(n)");
  calibrate->add_option("--out", cal_out, "threshold table path");
  cal_noise.attach(calibrate);

  // --- predict --------------------------------------------------------
  auto* predict =
      app.add_subcommand("predict", "prediction sets from thresholds + scores");
  std::string pred_input, pred_thresholds, pred_out;
  std::string pred_score_kind = "hps";
  bool pred_scores_flag = false, pred_renormalize = false;
  double pred_jitter = 0.0;
  std::uint64_t pred_seed = 0;
  predict->add_option("input", pred_input, "score file")->required();
  predict->add_option("--thresholds", pred_thresholds, "threshold table")
      ->required();
  predict->add_flag("--scores", pred_scores_flag,
                    "input columns are conformity scores");
  predict->add_flag("--renormalize", pred_renormalize,
                    "renormalize probability rows");
  predict->add_option("--score-kind", pred_score_kind, "hps|aps|aps-randomized");
  predict->add_option("--jitter", pred_jitter, "score jitter amplitude");
  predict->add_option("--seed", pred_seed, "seed for score randomization");
  predict->add_option("--out", pred_out, "output path (default stdout)");

  // --- fit-noise ------------------------------------------------------
  auto* fit = app.add_subcommand("fit-noise",
                                 "fit a contamination model from clean + noisy data");
  std::string fit_clean, fit_noisy, fit_model = "rr", fit_out;
  double fit_alpha_v = 0.01, fit_eps_bar = 0.25;
  int fit_B = 1000;
  std::uint64_t fit_seed = 0;
  bool fit_renormalize = false;
  fit->add_option("clean", fit_clean,
                  "score file with clean labels in y_true")
      ->required();
  fit->add_option("noisy", fit_noisy,
                  "score file with contaminated labels in y_noisy");
  fit->add_option("--model", fit_model, "rr|two-level-rr|general|match-rate");
  fit->add_option("--alpha-v", fit_alpha_v, "simultaneous region level");
  fit->add_option("--B", fit_B, "bootstrap replicates");
  fit->add_option("--eps-bar", fit_eps_bar, "a-priori epsilon bound");
  fit->add_option("--seed", fit_seed, "bootstrap seed");
  fit->add_flag("--renormalize", fit_renormalize, "renormalize probability rows");
  fit->add_option("--out", fit_out, "report path (default stdout)");

  // --- ctable ---------------------------------------------------------
  auto* ctable_cmd =
      app.add_subcommand("ctable", "precompute c(n) for a list of n");
  std::vector<int> ct_ns;
  int ct_reps = 10000;
  std::uint64_t ct_seed = 20240901;
  std::string ct_out;
  ctable_cmd->add_option("--n", ct_ns, "comma separated sizes")
      ->required()
      ->delimiter(',');
  ctable_cmd->add_option("--reps", ct_reps, "Monte Carlo replicates");
  ctable_cmd->add_option("--seed", ct_seed, "seed");
  ctable_cmd->add_option("--out", ct_out, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return run_simulate(sim_config, sim_out, sim_prov);
    }

    if (calibrate->parsed()) {
      const auto input =
          cln::ingest_scores(cal_input, cal_scores_flag, cal_renormalize);
      const cln::Method method = cln::parse_method(cal_method);
      const auto scores =
          scores_from_input(input, cal_score_kind, cal_jitter, cal_seed);
      cln::CTable ctable(cal_ctable_reps);
      const int K = input.K;
      std::string table;
      auto xi = [](double e) { return e / (1.0 - e); };
      switch (method.kind) {
        case cln::MethodKind::StandardLC: {
          const auto tau =
              cln::standard_label_conditional(scores, input.y_noisy, cal_alpha);
          table = cln::format_thresholds(tau, method.name, cal_alpha, {});
          break;
        }
        case cln::MethodKind::StandardMarg: {
          const double tau =
              cln::standard_marginal(scores, input.y_noisy, cal_alpha);
          table = cln::format_marginal_threshold(tau, method.name, cal_alpha, 0.0);
          break;
        }
        case cln::MethodKind::Adaptive:
        case cln::MethodKind::AdaptiveCC: {
          const auto model = cal_noise.build(K);
          cln::EcdfFamily ecdf(scores, input.y_noisy, K);
          std::vector<double> deltas;
          cln::Thresholds tau;
          if (method.kind == cln::MethodKind::Adaptive) {
            tau = cln::adaptive_label_conditional(scores, input.y_noisy,
                                                  model.V, cal_alpha, ctable,
                                                  method.optimistic);
            for (int k = 0; k < K; ++k) {
              deltas.push_back(cln::correction_delta(
                  ecdf.group_size(k), ecdf.min_group_size(),
                  model.off_diag_abs_sum(k), K, ctable));
            }
          } else {
            tau = cln::adaptive_calibration_conditional(
                scores, input.y_noisy, model.V, cal_alpha, cal_gamma,
                method.optimistic);
            for (int k = 0; k < K; ++k) {
              double row_abs = 0.0;
              for (int l = 0; l < K; ++l) row_abs += std::abs(model.V(k, l));
              deltas.push_back(cln::correction_delta_cc(
                  ecdf.group_size(k), ecdf.min_group_size(),
                  model.off_diag_abs_sum(k), row_abs, K, cal_gamma));
            }
          }
          table = cln::format_thresholds(tau, method.name, cal_alpha, deltas);
          break;
        }
        case cln::MethodKind::AdaptiveMarg: {
          const auto model = cal_noise.build(K);
          cln::EcdfFamily ecdf(scores, input.y_noisy, K);
          const double tau = cln::adaptive_marginal(
              scores, input.y_noisy, model.V, model.rho_tilde, cal_alpha,
              ctable, method.optimistic);
          const double delta = cln::correction_delta_marg(
              model.V, cln::clean_frequencies(model.V, model.rho_tilde),
              model.rho_tilde, scores.rows(), ecdf.min_group_size(), ctable);
          table = cln::format_marginal_threshold(tau, method.name, cal_alpha,
                                                 delta);
          break;
        }
        case cln::MethodKind::AdaptiveCI: {
          if (!cal_eps_low || !cal_eps_upp) {
            throw cln::ConfigError(
                "adaptive-ci needs --eps-low and --eps-upp (or use fit-noise)");
          }
          const double bar = std::max(cal_eps_bar, *cal_eps_upp);
          cln::NoiseRegion region;
          if (cal_nu_low || cal_nu_upp) {
            region = cln::NoiseRegion::two_level_rr(
                K, xi(*cal_eps_low), xi(*cal_eps_upp),
                cal_nu_low.value_or(0.0), cal_nu_upp.value_or(1.0), xi(bar),
                cal_alpha_v);
          } else {
            Eigen::VectorXd rho_tilde = Eigen::VectorXd::Zero(K);
            for (int y : input.y_noisy) rho_tilde[y] += 1.0;
            rho_tilde /= static_cast<double>(input.y_noisy.size());
            region = cln::NoiseRegion::randomized_response(
                K, xi(*cal_eps_low), xi(*cal_eps_upp), xi(bar), rho_tilde,
                cal_alpha_v);
          }
          cln::EcdfFamily ecdf(scores, input.y_noisy, K);
          const auto tau = cln::adaptive_ci(scores, input.y_noisy, region,
                                            cal_alpha, ctable,
                                            method.optimistic);
          std::vector<double> deltas;
          for (int k = 0; k < K; ++k) {
            deltas.push_back(cln::correction_delta_ci(
                region, k, ecdf.group_size(k), ecdf.min_group_size(), ctable));
          }
          table = cln::format_thresholds(tau, method.name, cal_alpha, deltas);
          break;
        }
      }
      write_output(cal_out, table);
      return 0;
    }

    if (predict->parsed()) {
      const auto input =
          cln::ingest_scores(pred_input, pred_scores_flag, pred_renormalize);
      const auto scores =
          scores_from_input(input, pred_score_kind, pred_jitter, pred_seed);
      std::ifstream tin(pred_thresholds);
      if (!tin) {
        throw cln::ConfigError("cannot open thresholds: " + pred_thresholds);
      }
      const cln::Thresholds tau = cln::parse_thresholds(tin, input.K);
      const auto sets = cln::prediction_sets(scores, tau);
      std::ostringstream out;
      out << "id,set\n";
      for (std::size_t i = 0; i < sets.size(); ++i) {
        out << input.ids[i] << ",";
        for (std::size_t j = 0; j < sets[i].size(); ++j) {
          if (j > 0) out << ";";
          out << sets[i][j];
        }
        out << "\n";
      }
      write_output(pred_out, out.str());
      return 0;
    }

    if (fit->parsed()) {
      const auto clean = cln::ingest_scores(fit_clean, false, fit_renormalize);
      if (!clean.has_clean_labels) {
        throw cln::BadLabel("clean input must carry y_true labels");
      }
      if (fit_model == "match-rate") {
        const double eps = cln::epsilon_from_mismatch_rate(
            clean.y_true, clean.y_noisy, clean.K);
        std::ostringstream out;
        out.precision(12);
        out << "method=match-rate\nK=" << clean.K << "\neps_hat=" << eps
            << "\n";
        write_output(fit_out, out.str());
        return 0;
      }
      if (fit_noisy.empty()) {
        throw cln::ConfigError("fit-noise needs a noisy input file");
      }
      const auto noisy = cln::ingest_scores(fit_noisy, false, fit_renormalize);
      if (noisy.K != clean.K) {
        throw cln::SchemaMismatch("clean and noisy files disagree on K");
      }
      cln::Rng rng = cln::make_rng(fit_seed, 0, "fit-noise");
      cln::FitSummary summary;
      if (fit_model == "rr") {
        summary = cln::fit_rr(clean.values, clean.y_true, noisy.values,
                              noisy.y_noisy, clean.K, fit_alpha_v, fit_B,
                              fit_eps_bar, rng);
      } else if (fit_model == "two-level-rr") {
        summary = cln::fit_two_level_rr(clean.values, clean.y_true,
                                        noisy.values, noisy.y_noisy, clean.K,
                                        fit_alpha_v, fit_B, fit_eps_bar, rng);
      } else if (fit_model == "general") {
        summary = cln::fit_general(clean.values, clean.y_true, noisy.values,
                                   noisy.y_noisy, clean.K, fit_alpha_v, fit_B,
                                   rng);
      } else {
        throw cln::ConfigError("unknown fit model: " + fit_model);
      }
      write_output(fit_out, summary.serialize());
      return 0;
    }

    if (ctable_cmd->parsed()) {
      std::ostringstream out;
      out.precision(12);
      out << "n,c\n";
      for (int n : ct_ns) {
        cln::Rng rng = cln::make_rng(ct_seed, static_cast<std::uint64_t>(n),
                                     "ctable");
        out << n << "," << cln::monte_carlo_c(n, ct_reps, rng) << "\n";
      }
      write_output(ct_out, out.str());
      return 0;
    }
  } catch (const cln::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
