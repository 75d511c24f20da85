#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cln/bounds.hpp"
#include "cln/calibration.hpp"
#include "cln/contamination.hpp"
#include "cln/ctable.hpp"
#include "cln/errors.hpp"
#include "cln/estimation.hpp"
#include "cln/harness.hpp"
#include "cln/scores.hpp"
#include "cln/synth.hpp"

namespace py = pybind11;
using namespace cln;

namespace {

ScoreMatrix scores_from_array(const Eigen::MatrixXd& s) {
  ScoreMatrix out;
  out.s = s;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conformal classification with contaminated calibration labels";

  py::register_exception<Error>(m, "ClnError");

  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("General", NoiseKind::General)
      .value("RR", NoiseKind::RR)
      .value("TwoLevelRR", NoiseKind::TwoLevelRR)
      .value("BlockDiag", NoiseKind::BlockDiag)
      .value("RandomU", NoiseKind::RandomU);

  py::class_<ContaminationModel>(m, "ContaminationModel")
      .def_readonly("K", &ContaminationModel::K)
      .def_readonly("T", &ContaminationModel::T)
      .def_readonly("rho", &ContaminationModel::rho)
      .def_readonly("rho_tilde", &ContaminationModel::rho_tilde)
      .def_readonly("M", &ContaminationModel::M)
      .def_readonly("V", &ContaminationModel::V)
      .def_readonly("kind", &ContaminationModel::kind)
      .def_readonly("epsilon", &ContaminationModel::epsilon)
      .def_readonly("nu", &ContaminationModel::nu)
      .def("off_diag_abs_sum", &ContaminationModel::off_diag_abs_sum)
      .def("serialize", &ContaminationModel::serialize);

  m.def("build_rr", &build_rr, py::arg("K"), py::arg("epsilon"), py::arg("rho"));
  m.def("build_rr_uniform", &build_rr_uniform, py::arg("K"), py::arg("epsilon"));
  m.def("build_two_level_rr", &build_two_level_rr, py::arg("K"),
        py::arg("epsilon"), py::arg("nu"));
  m.def("build_from_transition", &build_from_transition, py::arg("T"),
        py::arg("rho"));
  m.def("build_block_diag", &build_block_diag, py::arg("K"), py::arg("epsilon"));
  m.def("build_random_u", &build_random_u, py::arg("K"), py::arg("epsilon"),
        py::arg("seed"));
  m.def(
      "corrupt_labels",
      [](const std::vector<int>& y, const ContaminationModel& model,
         std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, "corrupt");
        return corrupt_labels(y, model, rng);
      },
      py::arg("y"), py::arg("model"), py::arg("seed"));

  py::class_<ScoreMatrix>(m, "ScoreMatrix")
      .def_readonly("s", &ScoreMatrix::s)
      .def_readonly("jitter", &ScoreMatrix::jitter)
      .def_property_readonly("kind",
                             [](const ScoreMatrix& s) { return to_string(s.kind); });

  m.def(
      "hps_scores",
      [](const Eigen::MatrixXd& probs, double jitter, std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, "score");
        return hps_scores(probs, jitter, rng);
      },
      py::arg("probs"), py::arg("jitter") = 0.0, py::arg("seed") = 0);
  m.def(
      "aps_scores",
      [](const Eigen::MatrixXd& probs, bool randomized, std::uint64_t seed,
         double jitter) {
        Rng rng = make_rng(seed, 0, "score");
        return aps_scores(probs, randomized, rng, jitter);
      },
      py::arg("probs"), py::arg("randomized") = false, py::arg("seed") = 0,
      py::arg("jitter") = 0.0);

  py::class_<Thresholds>(m, "Thresholds")
      .def(py::init([](const Eigen::VectorXd& tau) { return Thresholds(tau); }))
      .def_readonly("tau", &Thresholds::tau);

  m.def(
      "prediction_set",
      [](const Eigen::VectorXd& row, const Eigen::VectorXd& tau) {
        return prediction_set(row, Thresholds(tau));
      },
      py::arg("score_row"), py::arg("tau"));
  m.def(
      "prediction_sets",
      [](const Eigen::MatrixXd& s, const Eigen::VectorXd& tau) {
        return prediction_sets(scores_from_array(s), Thresholds(tau));
      },
      py::arg("scores"), py::arg("tau"));

  py::class_<CTable>(m, "CTable")
      .def(py::init<int, std::uint64_t>(), py::arg("reps") = 10000,
           py::arg("seed") = 20240901)
      .def("c", &CTable::c);
  m.def(
      "monte_carlo_c",
      [](int n, int reps, std::uint64_t seed) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(n), "ctable");
        return monte_carlo_c(n, reps, rng);
      },
      py::arg("n"), py::arg("reps") = 10000, py::arg("seed") = 20240901);

  py::class_<NoiseRegion>(m, "NoiseRegion")
      .def_readonly("v_low", &NoiseRegion::v_low)
      .def_readonly("v_upp", &NoiseRegion::v_upp)
      .def_readonly("v_bar", &NoiseRegion::v_bar)
      .def_readonly("alpha_v", &NoiseRegion::alpha_v)
      .def_readonly("zeta_upp", &NoiseRegion::zeta_upp)
      .def("validate", &NoiseRegion::validate)
      .def_static("degenerate", &NoiseRegion::degenerate)
      .def_static("randomized_response", &NoiseRegion::randomized_response,
                  py::arg("K"), py::arg("xi_low"), py::arg("xi_upp"),
                  py::arg("xi_bar"), py::arg("rho_tilde"), py::arg("alpha_v"))
      .def_static("two_level_rr", &NoiseRegion::two_level_rr, py::arg("K"),
                  py::arg("xi_low"), py::arg("xi_upp"), py::arg("nu_low"),
                  py::arg("nu_upp"), py::arg("xi_bar"), py::arg("alpha_v"));

  m.def(
      "standard_label_conditional",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y, double alpha) {
        return standard_label_conditional(scores_from_array(s), y, alpha).tau;
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("alpha"));
  m.def(
      "standard_marginal",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y, double alpha) {
        return standard_marginal(scores_from_array(s), y, alpha);
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("alpha"));
  m.def(
      "adaptive_label_conditional",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y,
         const Eigen::MatrixXd& V, double alpha, bool optimistic,
         int ctable_reps) {
        CTable ctable(ctable_reps);
        return adaptive_label_conditional(scores_from_array(s), y, V, alpha,
                                          ctable, optimistic)
            .tau;
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("V"), py::arg("alpha"),
      py::arg("optimistic") = true, py::arg("ctable_reps") = 10000);
  m.def(
      "adaptive_ci",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y,
         const NoiseRegion& region, double alpha, bool optimistic,
         int ctable_reps) {
        CTable ctable(ctable_reps);
        return adaptive_ci(scores_from_array(s), y, region, alpha, ctable,
                           optimistic)
            .tau;
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("region"),
      py::arg("alpha"), py::arg("optimistic") = true,
      py::arg("ctable_reps") = 10000);
  m.def(
      "adaptive_marginal",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y,
         const Eigen::MatrixXd& V, const Eigen::VectorXd& rho_tilde,
         double alpha, bool optimistic, int ctable_reps) {
        CTable ctable(ctable_reps);
        return adaptive_marginal(scores_from_array(s), y, V, rho_tilde, alpha,
                                 ctable, optimistic);
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("V"),
      py::arg("rho_tilde"), py::arg("alpha"), py::arg("optimistic") = true,
      py::arg("ctable_reps") = 10000);
  m.def(
      "adaptive_calibration_conditional",
      [](const Eigen::MatrixXd& s, const std::vector<int>& y,
         const Eigen::MatrixXd& V, double alpha, double gamma,
         bool optimistic) {
        return adaptive_calibration_conditional(scores_from_array(s), y, V,
                                                alpha, gamma, optimistic)
            .tau;
      },
      py::arg("scores"), py::arg("y_noisy"), py::arg("V"), py::arg("alpha"),
      py::arg("gamma"), py::arg("optimistic") = true);
  m.def("worst_case_coverage", &worst_case_coverage, py::arg("V"),
        py::arg("k"), py::arg("alpha"), py::arg("n_k"));

  py::class_<FitSummary>(m, "FitSummary")
      .def_readonly("K", &FitSummary::K)
      .def_readonly("Q_tilde", &FitSummary::Q_tilde)
      .def_readonly("Q", &FitSummary::Q)
      .def_readonly("psi", &FitSummary::psi)
      .def_readonly("psi_tilde", &FitSummary::psi_tilde)
      .def_readonly("phi", &FitSummary::phi)
      .def_readonly("phi_tilde", &FitSummary::phi_tilde)
      .def_readonly("V_hat", &FitSummary::V_hat)
      .def_readonly("eps_hat", &FitSummary::eps_hat)
      .def_readonly("nu_hat", &FitSummary::nu_hat)
      .def_readonly("eps_low", &FitSummary::eps_low)
      .def_readonly("eps_upp", &FitSummary::eps_upp)
      .def_readonly("nu_low", &FitSummary::nu_low)
      .def_readonly("nu_upp", &FitSummary::nu_upp)
      .def_readonly("region", &FitSummary::region)
      .def("serialize", &FitSummary::serialize);

  m.def(
      "fit_rr",
      [](const Eigen::MatrixXd& clean_probs, const std::vector<int>& clean_y,
         const Eigen::MatrixXd& noisy_probs, const std::vector<int>& noisy_y,
         int K, double alpha_v, int B, double eps_bar, std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, "fit");
        return fit_rr(clean_probs, clean_y, noisy_probs, noisy_y, K, alpha_v,
                      B, eps_bar, rng);
      },
      py::arg("clean_probs"), py::arg("clean_y"), py::arg("noisy_probs"),
      py::arg("noisy_y"), py::arg("K"), py::arg("alpha_v") = 0.01,
      py::arg("B") = 1000, py::arg("eps_bar") = 0.25, py::arg("seed") = 0);
  m.def(
      "fit_two_level_rr",
      [](const Eigen::MatrixXd& clean_probs, const std::vector<int>& clean_y,
         const Eigen::MatrixXd& noisy_probs, const std::vector<int>& noisy_y,
         int K, double alpha_v, int B, double eps_bar, std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, "fit");
        return fit_two_level_rr(clean_probs, clean_y, noisy_probs, noisy_y, K,
                                alpha_v, B, eps_bar, rng);
      },
      py::arg("clean_probs"), py::arg("clean_y"), py::arg("noisy_probs"),
      py::arg("noisy_y"), py::arg("K"), py::arg("alpha_v") = 0.01,
      py::arg("B") = 1000, py::arg("eps_bar") = 0.25, py::arg("seed") = 0);
  m.def(
      "fit_general",
      [](const Eigen::MatrixXd& clean_probs, const std::vector<int>& clean_y,
         const Eigen::MatrixXd& noisy_probs, const std::vector<int>& noisy_y,
         int K, double alpha_v, int B, std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, "fit");
        return fit_general(clean_probs, clean_y, noisy_probs, noisy_y, K,
                           alpha_v, B, rng);
      },
      py::arg("clean_probs"), py::arg("clean_y"), py::arg("noisy_probs"),
      py::arg("noisy_y"), py::arg("K"), py::arg("alpha_v") = 0.01,
      py::arg("B") = 1000, py::arg("seed") = 0);
  m.def("invert_two_level_system", &invert_two_level_system, py::arg("psi"),
        py::arg("psi_tilde"), py::arg("phi"), py::arg("phi_tilde"),
        py::arg("K"));
  m.def("epsilon_from_mismatch_rate", &epsilon_from_mismatch_rate,
        py::arg("y"), py::arg("y_tilde"), py::arg("K"));

  py::class_<ProbabilityModel>(m, "ProbabilityModel")
      .def("predict", &ProbabilityModel::predict)
      .def_property_readonly("num_classes", &ProbabilityModel::num_classes);

  py::class_<GeneratedData>(m, "GeneratedData")
      .def_property_readonly("X",
                             [](const GeneratedData& g) { return g.data.X; })
      .def_property_readonly("y",
                             [](const GeneratedData& g) { return g.data.y; })
      .def_readonly("oracle", &GeneratedData::oracle);

  m.def("gen_hypercube_mixture", &gen_hypercube_mixture, py::arg("n"),
        py::arg("K"), py::arg("d"), py::arg("seed"),
        py::arg("informative") = 25);
  m.def("gen_logistic", &gen_logistic, py::arg("n"), py::arg("K"),
        py::arg("d"), py::arg("seed"));
  m.def("train_logistic", &train_logistic, py::arg("X"), py::arg("y"),
        py::arg("K"), py::arg("epochs"), py::arg("lr"), py::arg("seed"));

  m.def(
      "evaluate",
      [](const std::vector<std::vector<int>>& sets,
         const std::vector<int>& y_true, int K) {
        const EvalResult r = evaluate(sets, y_true, K);
        py::dict out;
        out["marginal_coverage"] = r.marginal_coverage;
        out["marginal_size"] = r.marginal_size;
        out["label_coverage"] = r.label_coverage;
        out["label_size"] = r.label_size;
        return out;
      },
      py::arg("sets"), py::arg("y_true"), py::arg("K"));

  m.def(
      "simulate",
      [](const std::string& config_text) {
        std::istringstream in(config_text);
        const ExperimentConfig cfg = parse_config(in);
        return metrics_header() + format_rows(run_experiment(cfg));
      },
      py::arg("config_text"),
      "Run a full experiment from config text; returns the metrics CSV.");
}
