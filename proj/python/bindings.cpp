#include "blindid/dataset_io.hpp"
#include "blindid/diagnostics.hpp"
#include "blindid/error.hpp"
#include "blindid/experiments.hpp"
#include "blindid/model.hpp"
#include "blindid/sensing.hpp"
#include "blindid/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <tuple>

namespace py = pybind11;
using namespace blindid;

namespace {

py::dict entries_to_dict(const InputPlan& plan) {
  py::dict d;
  for (const auto& [key, value] : plan.entries) d[py::make_tuple(key.experiment, key.step, key.state)] = value;
  return d;
}

InputPlan plan_from_dict(const Dims& dims, const std::map<std::tuple<Index, Index, Index>, double>& entries) {
  InputPlan plan{dims, {}};
  for (const auto& [key, value] : entries) {
    plan.entries[{std::get<0>(key), std::get<1>(key), std::get<2>(key)}] = value;
  }
  plan.validate();
  return plan;
}

}  // namespace

PYBIND11_MODULE(_blindid, m) {
  m.doc() = "Blind identification of LTV systems with sparse unknown inputs";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<OverflowError>(m, "OverflowError", base.ptr());
  py::register_exception<IdentifiabilityError>(m, "IdentifiabilityError", base.ptr());
  py::register_exception<BudgetError>(m, "BudgetError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::enum_<Mode>(m, "Mode").value("ltv", Mode::ltv).value("lti", Mode::lti);

  py::class_<Dims>(m, "Dims")
      .def(py::init([](Index n, Index k_f, Index q, Mode mode) {
             Dims d{n, k_f, q, mode};
             d.validate();
             return d;
           }),
           py::arg("n"), py::arg("k_f"), py::arg("q"), py::arg("mode") = Mode::ltv)
      .def_readwrite("n", &Dims::n)
      .def_readwrite("k_f", &Dims::k_f)
      .def_readwrite("q", &Dims::q)
      .def_readwrite("mode", &Dims::mode)
      .def("measurements", &Dims::measurements)
      .def("dynamics", &Dims::dynamics)
      .def("__eq__", [](const Dims& a, const Dims& b) { return a == b; })
      .def("__repr__", [](const Dims& d) {
        return "Dims(n=" + std::to_string(d.n) + ", k_f=" + std::to_string(d.k_f) + ", q=" + std::to_string(d.q) +
               ", mode=" + std::string(to_string(d.mode)) + ")";
      });

  m.def("stacked_index", &stacked_index, py::arg("dims"), py::arg("experiment"), py::arg("step"), py::arg("state"));
  m.def("dynamics_index", &dynamics_index, py::arg("dims"), py::arg("step"), py::arg("row"), py::arg("col"));

  py::class_<LtvModel>(m, "LtvModel")
      .def(py::init([](const Dims& dims, std::vector<Eigen::MatrixXd> mats) {
             LtvModel model{dims, std::move(mats)};
             model.validate();
             return model;
           }),
           py::arg("dims"), py::arg("a_mats"))
      .def_readonly("dims", &LtvModel::dims)
      .def_readonly("a_mats", &LtvModel::a_mats)
      .def("vectorize", &LtvModel::vectorize)
      .def_static("from_vector", &LtvModel::from_vector, py::arg("dims"), py::arg("a"));

  py::class_<InputPlan>(m, "InputPlan")
      .def(py::init(&plan_from_dict), py::arg("dims"), py::arg("entries"),
           "entries maps (experiment, step, state) to the input value")
      .def_readonly("dims", &InputPlan::dims)
      .def_property_readonly("entries", &entries_to_dict)
      .def("sparsity", &InputPlan::sparsity)
      .def("to_vector", &InputPlan::to_vector)
      .def_static("from_vector", &InputPlan::from_vector, py::arg("dims"), py::arg("u"), py::arg("threshold") = 0.0);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Dims& dims, const Eigen::MatrixXd& states, double eta) {
             Dataset ds{dims, states, eta};
             ds.validate();
             return ds;
           }),
           py::arg("dims"), py::arg("states"), py::arg("eta") = 0.0)
      .def_readonly("dims", &Dataset::dims)
      .def_readonly("states", &Dataset::states)
      .def_readonly("eta", &Dataset::eta)
      .def("step_matrix", &Dataset::step_matrix, py::arg("step"))
      .def("snapshot", [](const Dataset& ds, Index j, Index k) { return Eigen::VectorXd(ds.snapshot(j, k)); });

  m.def("simulate_dataset", &simulate_dataset, py::arg("model"), py::arg("inputs"),
        py::arg("noise") = Eigen::VectorXd(), py::arg("z0"));
  m.def("stack_measurements", &stack_measurements, py::arg("dataset"));
  m.def("read_dataset", &io::read_dataset, py::arg("dir"));
  m.def("write_dataset", &io::write_dataset, py::arg("dir"), py::arg("dataset"));

  py::class_<SensingSystem>(m, "SensingSystem")
      .def_readonly("dims", &SensingSystem::dims)
      .def_readonly("psi_a", &SensingSystem::psi_a)
      .def_readonly("z", &SensingSystem::z)
      .def_readwrite("eta", &SensingSystem::eta);
  m.def("assemble", &assemble, py::arg("dataset"), py::arg("mode") = Mode::ltv);
  m.def(
      "complement_projector", [](const SensingSystem& sys) { return complement_projector(sys).matrix(); },
      py::arg("system"), "Dense projector onto the orthogonal complement of range(Psi_a).");

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("optimal", SolveStatus::optimal)
      .value("max_iters", SolveStatus::max_iters)
      .value("infeasible", SolveStatus::infeasible);

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("eta", &SolverOptions::eta)
      .def_readwrite("feas_tol", &SolverOptions::feas_tol)
      .def_readwrite("obj_tol", &SolverOptions::obj_tol)
      .def_readwrite("max_iters", &SolverOptions::max_iters)
      .def_readwrite("sparsify_a", &SolverOptions::sparsify_a)
      .def_readwrite("lambda_a", &SolverOptions::lambda_a)
      .def_readwrite("rho", &SolverOptions::rho)
      .def_readwrite("polish", &SolverOptions::polish);

  py::class_<Solution>(m, "Solution")
      .def_readonly("u_star", &Solution::u_star)
      .def_readonly("a_star", &Solution::a_star)
      .def_readonly("residual_norm", &Solution::residual_norm)
      .def_readonly("objective", &Solution::objective)
      .def_readonly("status", &Solution::status)
      .def_readonly("iterations", &Solution::iterations)
      .def_readonly("polished", &Solution::polished);

  m.def(
      "solve_blind_id",
      [](const SensingSystem& sys, std::optional<SolverOptions> opts) {
        py::gil_scoped_release release;
        return solve_blind_id(sys, opts.value_or(SolverOptions{}));
      },
      py::arg("system"), py::arg("options") = py::none());

  py::class_<BpdnResult>(m, "BpdnResult")
      .def_readonly("x", &BpdnResult::x)
      .def_readonly("status", &BpdnResult::status)
      .def_readonly("residual_norm", &BpdnResult::residual_norm)
      .def_readonly("objective", &BpdnResult::objective)
      .def_readonly("iterations", &BpdnResult::iterations);
  m.def(
      "solve_bpdn",
      [](const Eigen::MatrixXd& mat, const Eigen::VectorXd& b, std::optional<SolverOptions> opts,
         const Eigen::VectorXd& w) { return solve_bpdn(mat, b, opts.value_or(SolverOptions{}), w); },
      py::arg("m"), py::arg("b"), py::arg("options") = py::none(), py::arg("weights") = Eigen::VectorXd());

  py::class_<L0Result>(m, "L0Result")
      .def_readonly("x", &L0Result::x)
      .def_readonly("support", &L0Result::support)
      .def_readonly("residual_norm", &L0Result::residual_norm)
      .def_readonly("found", &L0Result::found)
      .def_readonly("unique", &L0Result::unique);
  m.def(
      "solve_l0_oracle",
      [](const Eigen::MatrixXd& mat, const Eigen::VectorXd& b, double eta, Index s_max, std::uint64_t budget,
         std::vector<Index> dense_columns) {
        L0Options opts;
        opts.budget = budget;
        opts.dense_columns = std::move(dense_columns);
        return solve_l0_oracle(mat, b, eta, s_max, opts);
      },
      py::arg("m"), py::arg("b"), py::arg("eta"), py::arg("s_max"), py::arg("budget") = kDefaultBudget,
      py::arg("dense_columns") = std::vector<Index>{});

  m.def("mutual_coherence", &mutual_coherence, py::arg("m"));
  m.def("mcc_bound", &mcc_bound, py::arg("mu"));
  m.def(
      "spark_bruteforce",
      [](const Eigen::MatrixXd& mat, std::uint64_t budget) {
        const SparkResult r = spark_bruteforce(mat, budget);
        return py::make_tuple(r.value, r.exact);
      },
      py::arg("m"), py::arg("budget") = kDefaultBudget, "Returns (spark, exact).");
  m.def(
      "rip_constant_bruteforce",
      [](const Eigen::MatrixXd& mat, Index s, std::uint64_t budget) {
        return rip_constant_bruteforce(mat, s, budget).delta;
      },
      py::arg("m"), py::arg("s"), py::arg("budget") = kDefaultBudget);
  m.def(
      "nsp_check",
      [](const Eigen::MatrixXd& mat, Index s, std::uint64_t budget) {
        const NspResult r = nsp_check(mat, s, budget);
        return py::make_tuple(r.holds, r.max_ratio);
      },
      py::arg("m"), py::arg("s"), py::arg("budget") = kDefaultBudget, "Returns (holds, max_ratio).");

  py::class_<ConditionResult>(m, "ConditionResult")
      .def_readonly("name", &ConditionResult::name)
      .def_readonly("step", &ConditionResult::step)
      .def_readonly("value", &ConditionResult::value)
      .def_readonly("required", &ConditionResult::required)
      .def_readonly("passed", &ConditionResult::pass)
      .def_readonly("reason", &ConditionResult::reason);
  m.def("check_rank_conditions", &check_rank_conditions, py::arg("dataset"), py::arg("mode") = Mode::ltv);

  py::class_<DiagnosticsReport>(m, "DiagnosticsReport")
      .def_readonly("mode", &DiagnosticsReport::mode)
      .def_readonly("sparsity", &DiagnosticsReport::sparsity)
      .def_readonly("rho_u", &DiagnosticsReport::rho_u)
      .def_readonly("psi_a_rank", &DiagnosticsReport::psi_a_rank)
      .def_readonly("psi_a_cols", &DiagnosticsReport::psi_a_cols)
      .def_readonly("psi_a_full_rank", &DiagnosticsReport::psi_a_full_rank)
      .def_readonly("rank_conditions", &DiagnosticsReport::rank_conditions)
      .def_readonly("mu", &DiagnosticsReport::mu)
      .def_readonly("theorem1_pass", &DiagnosticsReport::theorem1_pass)
      .def("failures", &DiagnosticsReport::failures);
  m.def(
      "theorem1_check",
      [](const Dataset& ds, Index sparsity, Mode mode, bool coherence, std::uint64_t spark_budget) {
        return theorem1_check(ds, sparsity, mode, {coherence, spark_budget});
      },
      py::arg("dataset"), py::arg("u_sparsity"), py::arg("mode") = Mode::ltv, py::arg("coherence") = true,
      py::arg("spark_budget") = 0);

  py::enum_<NoiseDist>(m, "NoiseDist")
      .value("truncated_normal", NoiseDist::truncated_normal)
      .value("uniform", NoiseDist::uniform);

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("dims", &SyntheticConfig::dims)
      .def_readwrite("alpha_a", &SyntheticConfig::alpha_a)
      .def_readwrite("alpha_u", &SyntheticConfig::alpha_u)
      .def_readwrite("alpha_w", &SyntheticConfig::alpha_w)
      .def_readwrite("noise_dist", &SyntheticConfig::noise_dist)
      .def_readwrite("truncation", &SyntheticConfig::truncation)
      .def_readwrite("inputs_per_step", &SyntheticConfig::inputs_per_step)
      .def_readwrite("trials", &SyntheticConfig::trials)
      .def_readwrite("seed", &SyntheticConfig::seed)
      .def_readwrite("tau", &SyntheticConfig::tau)
      .def_readwrite("eta_inflation", &SyntheticConfig::eta_inflation);

  py::class_<SyntheticTrial>(m, "SyntheticTrial")
      .def_readonly("model", &SyntheticTrial::model)
      .def_readonly("inputs", &SyntheticTrial::inputs)
      .def_readonly("dataset", &SyntheticTrial::dataset)
      .def_readonly("u_true", &SyntheticTrial::u_true)
      .def_readonly("a_true", &SyntheticTrial::a_true);
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"), py::arg("trial") = 0);

  m.def(
      "mape_card",
      [](const Eigen::VectorXd& u_true, const Eigen::VectorXd& u_hat, double tau) {
        const CardinalityError c = mape_card(u_true, u_hat, tau);
        return py::make_tuple(c.rate, c.false_positives, c.false_negatives);
      },
      py::arg("u_true"), py::arg("u_hat"), py::arg("tau"), "Returns (rate, false_positives, false_negatives).");

  py::class_<MetricsSummary>(m, "MetricsSummary")
      .def_readonly("mape_card", &MetricsSummary::mape_card)
      .def_readonly("armse_nz", &MetricsSummary::armse_nz)
      .def_readonly("armse_nz_per_nonzero", &MetricsSummary::armse_nz_per_nonzero)
      .def_readonly("armse_a", &MetricsSummary::armse_a)
      .def_readonly("fp_count", &MetricsSummary::fp_count)
      .def_readonly("fn_count", &MetricsSummary::fn_count)
      .def_readonly("failure_fraction", &MetricsSummary::failure_fraction)
      .def_readonly("diagnostics_fail_fraction", &MetricsSummary::diagnostics_fail_fraction)
      .def_readonly("tau", &MetricsSummary::tau);
  m.def(
      "run_monte_carlo",
      [](const SyntheticConfig& cfg, Mode mode, std::optional<SolverOptions> solver, unsigned threads) {
        MonteCarloOptions opts;
        opts.solver = solver.value_or(SolverOptions{});
        opts.threads = threads;
        py::gil_scoped_release release;
        return run_monte_carlo(cfg, mode, opts);
      },
      py::arg("config"), py::arg("mode") = Mode::ltv, py::arg("solver") = py::none(), py::arg("threads") = 0);
}
