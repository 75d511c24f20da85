#include "cln/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cln/calibration.hpp"
#include "cln/errors.hpp"
#include "cln/estimation.hpp"
#include "cln/synth.hpp"

namespace cln {

Method parse_method(const std::string& name) {
  Method m;
  m.name = name;
  std::string base = name;
  if (!base.empty() && base.back() == '+') {
    m.optimistic = true;
    base.pop_back();
  }
  if (base == "standard-lc") m.kind = MethodKind::StandardLC;
  else if (base == "standard-marg") m.kind = MethodKind::StandardMarg;
  else if (base == "adaptive") m.kind = MethodKind::Adaptive;
  else if (base == "adaptive-ci") m.kind = MethodKind::AdaptiveCI;
  else if (base == "adaptive-marg") m.kind = MethodKind::AdaptiveMarg;
  else if (base == "adaptive-cc") m.kind = MethodKind::AdaptiveCC;
  else throw ConfigError("unknown method: " + name);
  if (m.optimistic &&
      (m.kind == MethodKind::StandardLC || m.kind == MethodKind::StandardMarg)) {
    throw ConfigError("standard methods have no optimistic variant: " + name);
  }
  return m;
}

void ExperimentConfig::validate() const {
  if (K < 2) throw ConfigError("K must be >= 2");
  if (n_cal < 1 || n_test < 1) throw ConfigError("n_cal and n_test must be positive");
  if (n_train < 0 || n_clean < 0) throw ConfigError("counts must be nonnegative");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must be in (0,1)");
  if (!(alpha_v > 0 && alpha_v < 1)) throw ConfigError("alpha_v must be in (0,1)");
  if (!(gamma > 0 && gamma < 1)) throw ConfigError("gamma must be in (0,1)");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (methods.empty()) throw ConfigError("method list is empty");
  if (model == "logistic" && n_train < 1) {
    throw ConfigError("model=logistic requires n_train >= 1");
  }
  if (generator != "hypercube" && generator != "logistic" && generator != "tree") {
    throw ConfigError("unknown generator: " + generator);
  }
  if (generator == "tree" && model == "oracle") {
    throw ConfigError("the tree generator has no analytic oracle; use model=logistic");
  }
  bool wants_ci = false;
  for (const auto& m : methods) {
    if (m.kind == MethodKind::AdaptiveCI) wants_ci = true;
  }
  if (wants_ci && !eps_low && n_clean == 0) {
    throw ConfigError(
        "adaptive-ci needs either a known interval (eps_low/eps_upp) or "
        "n_clean > 0 for model fitting");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    try {
      if (key == "generator") cfg.generator = value;
      else if (key == "n_train") cfg.n_train = std::stoi(value);
      else if (key == "n_cal") cfg.n_cal = std::stoi(value);
      else if (key == "n_test") cfg.n_test = std::stoi(value);
      else if (key == "K") cfg.K = std::stoi(value);
      else if (key == "d") cfg.d = std::stoi(value);
      else if (key == "noise") cfg.noise = value;
      else if (key == "epsilon") cfg.epsilon = std::stod(value);
      else if (key == "nu") cfg.nu = std::stod(value);
      else if (key == "transition_file") cfg.transition_file = value;
      else if (key == "model") cfg.model = value;
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "lr") cfg.lr = std::stod(value);
      else if (key == "score") cfg.score = value;
      else if (key == "jitter") cfg.jitter = std::stod(value);
      else if (key == "methods") {
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (!tok.empty()) cfg.methods.push_back(parse_method(tok));
        }
      } else if (key == "alpha") cfg.alpha = std::stod(value);
      else if (key == "alpha_v") cfg.alpha_v = std::stod(value);
      else if (key == "gamma") cfg.gamma = std::stod(value);
      else if (key == "eps_low") cfg.eps_low = std::stod(value);
      else if (key == "eps_upp") cfg.eps_upp = std::stod(value);
      else if (key == "nu_low") cfg.nu_low = std::stod(value);
      else if (key == "nu_upp") cfg.nu_upp = std::stod(value);
      else if (key == "n_clean") cfg.n_clean = std::stoi(value);
      else if (key == "n_noisy_fit") cfg.n_noisy_fit = std::stoi(value);
      else if (key == "bootstrap") cfg.bootstrap = std::stoi(value);
      else if (key == "eps_bar") cfg.eps_bar = std::stod(value);
      else if (key == "reps") cfg.reps = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "ctable_reps") cfg.ctable_reps = std::stoi(value);
      else throw ConfigError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": cannot parse value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

EvalResult evaluate(const std::vector<std::vector<int>>& sets,
                    const std::vector<int>& y_true, int K) {
  const int n = static_cast<int>(sets.size());
  if (n == 0) throw EmptyTestSet("no test predictions to evaluate");
  if (y_true.size() != sets.size()) {
    throw DimensionMismatch("prediction sets and labels disagree in length");
  }
  EvalResult out;
  out.label_coverage = Eigen::VectorXd::Zero(K);
  out.label_size = Eigen::VectorXd::Zero(K);
  out.label_counts = Eigen::VectorXi::Zero(K);
  double hits = 0.0, total_size = 0.0;
  for (int i = 0; i < n; ++i) {
    const int y = y_true[static_cast<std::size_t>(i)];
    if (y < 0 || y >= K) throw LabelOutOfRange("true label out of range");
    const auto& set = sets[static_cast<std::size_t>(i)];
    const bool hit = std::find(set.begin(), set.end(), y) != set.end();
    hits += hit ? 1.0 : 0.0;
    total_size += static_cast<double>(set.size());
    out.label_counts[y] += 1;
    out.label_coverage[y] += hit ? 1.0 : 0.0;
    out.label_size[y] += static_cast<double>(set.size());
  }
  out.marginal_coverage = hits / n;
  out.marginal_size = total_size / n;
  for (int k = 0; k < K; ++k) {
    if (out.label_counts[k] > 0) {
      out.label_coverage[k] /= out.label_counts[k];
      out.label_size[k] /= out.label_counts[k];
    } else {
      out.label_coverage[k] = std::nan("");
      out.label_size[k] = std::nan("");
    }
  }
  return out;
}

namespace {

ContaminationModel build_noise_model(const ExperimentConfig& cfg) {
  if (cfg.noise == "rr") return build_rr_uniform(cfg.K, cfg.epsilon);
  if (cfg.noise == "two-level-rr")
    return build_two_level_rr(cfg.K, cfg.epsilon, cfg.nu);
  if (cfg.noise == "block") return build_block_diag(cfg.K, cfg.epsilon);
  if (cfg.noise == "random-u") {
    // The random structure is part of the model, fixed across repetitions.
    return build_random_u(cfg.K, cfg.epsilon, derive_seed(cfg.seed, 0, "noise"));
  }
  if (cfg.noise == "file") {
    std::ifstream in(cfg.transition_file);
    if (!in) throw ConfigError("cannot open transition_file");
    return parse_model(in);
  }
  throw ConfigError("unknown noise kind: " + cfg.noise);
}

ScoreMatrix make_scores(const ExperimentConfig& cfg,
                        const Eigen::MatrixXd& probs, Rng& rng) {
  const ScoreKind kind = parse_score_kind(cfg.score);
  switch (kind) {
    case ScoreKind::HPS:
      return hps_scores(probs, cfg.jitter, rng);
    case ScoreKind::APS:
      return aps_scores(probs, false, rng, cfg.jitter);
    case ScoreKind::APSRandomized:
      return aps_scores(probs, true, rng, cfg.jitter);
  }
  throw ConfigError("unknown score kind");
}

struct RepResult {
  std::vector<CoverageRow> rows;
};

RepResult run_one_rep(const ExperimentConfig& cfg,
                      const ContaminationModel& noise, int rep,
                      CTable& ctable) {
  const int n_noisy_fit =
      cfg.n_noisy_fit > 0 ? cfg.n_noisy_fit : 10 * cfg.n_clean;
  const bool fitting = cfg.n_clean > 0;
  const int n_total = cfg.n_train + cfg.n_cal + cfg.n_test +
                      (fitting ? cfg.n_clean + n_noisy_fit : 0);

  // One draw from the data distribution per repetition, partitioned into
  // splits, so every split shares the same generative model.
  const std::uint64_t gen_seed = derive_seed(cfg.seed, rep, "generate");
  GeneratedData gen;
  if (cfg.generator == "hypercube") {
    gen = gen_hypercube_mixture(n_total, cfg.K, cfg.d, gen_seed);
  } else if (cfg.generator == "logistic") {
    gen = gen_logistic(n_total, cfg.K, cfg.d, gen_seed);
  } else {
    gen = gen_tree(n_total, cfg.d, gen_seed);
  }

  int offset = 0;
  auto take = [&](int count) {
    LabeledDataset split;
    split.X = gen.data.X.middleRows(offset, count);
    split.y.assign(gen.data.y.begin() + offset,
                   gen.data.y.begin() + offset + count);
    offset += count;
    return split;
  };
  LabeledDataset train = take(cfg.n_train);
  LabeledDataset cal = take(cfg.n_cal);
  LabeledDataset test = take(cfg.n_test);
  LabeledDataset fit_clean, fit_noisy;
  if (fitting) {
    fit_clean = take(cfg.n_clean);
    fit_noisy = take(n_noisy_fit);
  }

  Rng corrupt_rng = make_rng(cfg.seed, rep, "corrupt");
  train.y_tilde = corrupt_labels(train.y, noise, corrupt_rng);
  cal.y_tilde = corrupt_labels(cal.y, noise, corrupt_rng);
  if (fitting) fit_noisy.y_tilde = corrupt_labels(fit_noisy.y, noise, corrupt_rng);

  ProbabilityModel pi_model = gen.oracle;
  if (cfg.model == "logistic") {
    pi_model = train_logistic(train.X, train.y_tilde, cfg.K, cfg.epochs,
                              cfg.lr, derive_seed(cfg.seed, rep, "train"));
  }

  Rng score_rng = make_rng(cfg.seed, rep, "score");
  const ScoreMatrix cal_scores = make_scores(cfg, pi_model.predict(cal.X), score_rng);
  const ScoreMatrix test_scores =
      make_scores(cfg, pi_model.predict(test.X), score_rng);

  // Region for the bounded-noise methods: a known epsilon interval wins;
  // otherwise fit the contamination model from the clean/noisy fit splits.
  bool wants_ci = false, wants_marg = false;
  for (const auto& m : cfg.methods) {
    if (m.kind == MethodKind::AdaptiveCI) wants_ci = true;
    if (m.kind == MethodKind::AdaptiveMarg) wants_marg = true;
  }
  NoiseRegion region;
  if (wants_ci) {
    if (cfg.eps_low) {
      const double lo = *cfg.eps_low;
      const double hi = cfg.eps_upp ? *cfg.eps_upp : cfg.epsilon;
      const double bar = std::max(cfg.eps_bar, hi);
      auto xi = [](double e) { return e / (1.0 - e); };
      if (cfg.noise == "two-level-rr" || cfg.nu_low || cfg.nu_upp) {
        const double nlo = cfg.nu_low ? *cfg.nu_low : cfg.nu;
        const double nhi = cfg.nu_upp ? *cfg.nu_upp : cfg.nu;
        region = NoiseRegion::two_level_rr(cfg.K, xi(lo), xi(hi), nlo, nhi,
                                           xi(bar), cfg.alpha_v);
      } else {
        region = NoiseRegion::randomized_response(cfg.K, xi(lo), xi(hi),
                                                  xi(bar), noise.rho_tilde,
                                                  cfg.alpha_v);
      }
    } else {
      // Split the noisy fit data; train f on the first half when no oracle.
      const int half = fit_noisy.size() / 2;
      Eigen::MatrixXd Xa = fit_noisy.X.topRows(half);
      std::vector<int> ya(fit_noisy.y_tilde.begin(),
                          fit_noisy.y_tilde.begin() + half);
      Eigen::MatrixXd Xb = fit_noisy.X.bottomRows(fit_noisy.size() - half);
      std::vector<int> yb(fit_noisy.y_tilde.begin() + half,
                          fit_noisy.y_tilde.end());
      ProbabilityModel f_model = pi_model;
      if (cfg.model == "logistic") {
        f_model = train_logistic(Xa, ya, cfg.K, cfg.epochs, cfg.lr,
                                 derive_seed(cfg.seed, rep, "fit-train"));
      }
      Rng fit_rng = make_rng(cfg.seed, rep, "fit");
      FitSummary fit;
      if (cfg.noise == "two-level-rr") {
        fit = fit_two_level_rr(f_model.predict(fit_clean.X), fit_clean.y,
                               f_model.predict(Xb), yb, cfg.K, cfg.alpha_v,
                               cfg.bootstrap, cfg.eps_bar, fit_rng);
      } else if (cfg.noise == "rr") {
        fit = fit_rr(f_model.predict(fit_clean.X), fit_clean.y,
                     f_model.predict(Xb), yb, cfg.K, cfg.alpha_v,
                     cfg.bootstrap, cfg.eps_bar, fit_rng);
      } else {
        fit = fit_general(f_model.predict(fit_clean.X), fit_clean.y,
                          f_model.predict(Xb), yb, cfg.K, cfg.alpha_v,
                          cfg.bootstrap, fit_rng);
      }
      region = fit.region;
    }
  }

  RepResult result;
  auto emit = [&](const std::string& name, const EvalResult& eval) {
    CoverageRow marg{name, cfg.alpha, rep, -1, eval.marginal_coverage,
                     eval.marginal_size, cfg.n_cal, cfg.seed};
    result.rows.push_back(marg);
    for (int k = 0; k < cfg.K; ++k) {
      result.rows.push_back(CoverageRow{name, cfg.alpha, rep, k,
                                        eval.label_coverage[k],
                                        eval.label_size[k], cfg.n_cal,
                                        cfg.seed});
    }
  };

  for (const auto& method : cfg.methods) {
    Thresholds tau;
    switch (method.kind) {
      case MethodKind::StandardLC:
        tau = standard_label_conditional(cal_scores, cal.y_tilde, cfg.alpha);
        break;
      case MethodKind::StandardMarg:
        tau = Thresholds::uniform(
            cfg.K, standard_marginal(cal_scores, cal.y_tilde, cfg.alpha));
        break;
      case MethodKind::Adaptive:
        tau = adaptive_label_conditional(cal_scores, cal.y_tilde, noise.V,
                                         cfg.alpha, ctable, method.optimistic);
        break;
      case MethodKind::AdaptiveCI:
        tau = adaptive_ci(cal_scores, cal.y_tilde, region, cfg.alpha, ctable,
                          method.optimistic);
        break;
      case MethodKind::AdaptiveMarg:
        tau = Thresholds::uniform(
            cfg.K, adaptive_marginal(cal_scores, cal.y_tilde, noise.V,
                                     noise.rho_tilde, cfg.alpha, ctable,
                                     method.optimistic));
        break;
      case MethodKind::AdaptiveCC:
        tau = adaptive_calibration_conditional(cal_scores, cal.y_tilde,
                                               noise.V, cfg.alpha, cfg.gamma,
                                               method.optimistic);
        break;
    }
    emit(method.name, evaluate(prediction_sets(test_scores, tau), test.y, cfg.K));
  }
  (void)wants_marg;
  return result;
}

}  // namespace

std::vector<CoverageRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ContaminationModel noise = build_noise_model(config);
  CTable ctable(config.ctable_reps);
  // Group sizes repeat across repetitions, so warm the cache for the pooled
  // size; per-label sizes are filled on demand under the table's own lock.
  ctable.c(config.n_cal);

  std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_threads =
      std::max(1, std::min(config.reps,
                           config.threads > 0 ? config.threads : hw));
  auto run_rep = [&](int rep) {
    try {
      results[static_cast<std::size_t>(rep)] =
          run_one_rep(config, noise, rep, ctable);
    } catch (const Error& e) {
      throw Error("repetition " + std::to_string(rep) + ": " + e.what());
    }
  };
  if (n_threads == 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= config.reps) return;
        try {
          run_rep(rep);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<CoverageRow> rows;
  for (auto& r : results) {
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }
  return rows;
}

}  // namespace cln
