#include "blindid/cli.hpp"

#include "blindid/dataset_io.hpp"
#include "blindid/error.hpp"
#include "blindid/plots.hpp"
#include "blindid/sensing.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

namespace blindid::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr std::array<std::pair<Command, std::string_view>, 5> kCommands{{
    {Command::simulate, "simulate"},
    {Command::identify, "identify"},
    {Command::diagnose, "diagnose"},
    {Command::montecarlo, "montecarlo"},
    {Command::sweep, "sweep"},
}};

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_field(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(Command command) {
  for (const auto& [c, name] : kCommands)
    if (c == command) return name;
  return "?";
}

Command parse_command(std::string_view text) {
  for (const auto& [c, name] : kCommands)
    if (name == text) return c;
  throw ConfigError("unknown command '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  synthetic.validate();
  solver.validate();
  if (solver_eta && !(*solver_eta >= 0.0)) throw ConfigError("solver.eta must be >= 0");
  if (synthetic.dims.mode != mode) throw ConfigError("synthetic mode disagrees with run mode");
  if (synthetic.seed != seed) throw ConfigError("synthetic seed disagrees with run seed");
  if (out.empty()) throw ConfigError("output directory is empty");
  if (command == Command::identify || command == Command::diagnose) {
    if (dataset.empty()) throw ConfigError(std::string(to_string(command)) + " needs a dataset directory");
    if (!fs::is_directory(dataset)) throw ConfigError("dataset directory " + dataset.string() + " does not exist");
  }
  if (command == Command::sweep) {
    if (grid.q_values.empty() || grid.alpha_w_values.empty()) throw ConfigError("sweep grid is empty");
    for (Index q : grid.q_values)
      if (q < 1) throw ConfigError("sweep q values must be >= 1");
    for (double w : grid.alpha_w_values)
      if (!(w >= 0.0)) throw ConfigError("sweep alpha_w values must be >= 0");
  }
  if (expected_sparsity && *expected_sparsity < 0) throw ConfigError("expected_sparsity must be >= 0");
}

RunConfig parse_config(const json& doc, Command command) {
  RunConfig cfg;
  cfg.command = command;
  try {
    reject_unknown(doc,
                   {"command", "mode", "seed", "threads", "dataset", "out", "dump_sensing", "plots", "synthetic",
                    "solver", "sweep", "diagnostics", "tool", "version", "artifacts"},
                   "config");
    if (doc.contains("command") && parse_command(doc.at("command").get<std::string>()) != command) {
      throw ConfigError("config was written for command '" + doc.at("command").get<std::string>() + "'");
    }
    if (doc.contains("mode")) cfg.mode = parse_mode(doc.at("mode").get<std::string>());
    read_field(doc, "seed", cfg.seed);
    read_field(doc, "threads", cfg.threads);
    if (doc.contains("dataset")) cfg.dataset = doc.at("dataset").get<std::string>();
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
    if (doc.contains("dump_sensing") && !doc.at("dump_sensing").is_null()) {
      cfg.dump_sensing = doc.at("dump_sensing").get<std::string>();
    }
    read_field(doc, "plots", cfg.plots);

    SyntheticConfig& syn = cfg.synthetic;
    if (doc.contains("synthetic")) {
      const json& s = doc.at("synthetic");
      reject_unknown(s,
                     {"n", "k_f", "q", "alpha_a", "alpha_u", "alpha_w", "noise_dist", "truncation", "inputs_per_step",
                      "trials", "tau", "eta_inflation"},
                     "synthetic");
      read_field(s, "n", syn.dims.n);
      read_field(s, "k_f", syn.dims.k_f);
      read_field(s, "q", syn.dims.q);
      read_field(s, "alpha_a", syn.alpha_a);
      read_field(s, "alpha_u", syn.alpha_u);
      read_field(s, "alpha_w", syn.alpha_w);
      if (s.contains("noise_dist")) syn.noise_dist = parse_noise_dist(s.at("noise_dist").get<std::string>());
      read_field(s, "truncation", syn.truncation);
      read_field(s, "inputs_per_step", syn.inputs_per_step);
      read_field(s, "trials", syn.trials);
      read_field(s, "tau", syn.tau);
      read_field(s, "eta_inflation", syn.eta_inflation);
    }
    syn.dims.mode = cfg.mode;
    syn.seed = cfg.seed;

    SolverOptions& so = cfg.solver;
    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      reject_unknown(s,
                     {"eta", "feas_tol", "obj_tol", "max_iters", "sparsify_a", "lambda_a", "rho", "rebalance_every",
                      "rebalance_ratio", "polish"},
                     "solver");
      if (s.contains("eta") && !s.at("eta").is_null()) cfg.solver_eta = s.at("eta").get<double>();
      read_field(s, "feas_tol", so.feas_tol);
      read_field(s, "obj_tol", so.obj_tol);
      read_field(s, "max_iters", so.max_iters);
      read_field(s, "sparsify_a", so.sparsify_a);
      read_field(s, "lambda_a", so.lambda_a);
      read_field(s, "rho", so.rho);
      read_field(s, "rebalance_every", so.rebalance_every);
      read_field(s, "rebalance_ratio", so.rebalance_ratio);
      read_field(s, "polish", so.polish);
    }
    if (doc.contains("sweep")) {
      const json& s = doc.at("sweep");
      reject_unknown(s, {"q_values", "alpha_w_values"}, "sweep");
      read_field(s, "q_values", cfg.grid.q_values);
      read_field(s, "alpha_w_values", cfg.grid.alpha_w_values);
    }
    if (doc.contains("diagnostics")) {
      const json& s = doc.at("diagnostics");
      reject_unknown(s, {"coherence", "spark_budget", "expected_sparsity"}, "diagnostics");
      read_field(s, "coherence", cfg.diagnostics.coherence);
      read_field(s, "spark_budget", cfg.diagnostics.spark_budget);
      if (s.contains("expected_sparsity") && !s.at("expected_sparsity").is_null()) {
        cfg.expected_sparsity = s.at("expected_sparsity").get<Index>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const SyntheticConfig& syn = cfg.synthetic;
  const SolverOptions& so = cfg.solver;
  json doc;
  doc["command"] = std::string(to_string(cfg.command));
  doc["mode"] = std::string(to_string(cfg.mode));
  doc["seed"] = cfg.seed;
  doc["threads"] = cfg.threads;
  doc["dataset"] = cfg.dataset.generic_string();
  doc["out"] = cfg.out.generic_string();
  doc["dump_sensing"] = cfg.dump_sensing ? json(cfg.dump_sensing->generic_string()) : json(nullptr);
  doc["plots"] = cfg.plots;
  doc["synthetic"] = {
      {"n", syn.dims.n},
      {"k_f", syn.dims.k_f},
      {"q", syn.dims.q},
      {"alpha_a", syn.alpha_a},
      {"alpha_u", syn.alpha_u},
      {"alpha_w", syn.alpha_w},
      {"noise_dist", std::string(to_string(syn.noise_dist))},
      {"truncation", syn.truncation},
      {"inputs_per_step", syn.inputs_per_step},
      {"trials", syn.trials},
      {"tau", syn.tau},
      {"eta_inflation", syn.eta_inflation},
  };
  doc["solver"] = {
      {"eta", cfg.solver_eta ? json(*cfg.solver_eta) : json(nullptr)},
      {"feas_tol", so.feas_tol},
      {"obj_tol", so.obj_tol},
      {"max_iters", so.max_iters},
      {"sparsify_a", so.sparsify_a},
      {"lambda_a", so.lambda_a},
      {"rho", so.rho},
      {"rebalance_every", so.rebalance_every},
      {"rebalance_ratio", so.rebalance_ratio},
      {"polish", so.polish},
  };
  doc["sweep"] = {{"q_values", cfg.grid.q_values}, {"alpha_w_values", cfg.grid.alpha_w_values}};
  doc["diagnostics"] = {
      {"coherence", cfg.diagnostics.coherence},
      {"spark_budget", cfg.diagnostics.spark_budget},
      {"expected_sparsity", cfg.expected_sparsity ? json(*cfg.expected_sparsity) : json(nullptr)},
  };
  return doc;
}

json to_json(const DiagnosticsReport& r) {
  json conditions = json::array();
  for (const auto& c : r.rank_conditions) {
    conditions.push_back({{"name", c.name},
                          {"step", c.step >= 0 ? json(c.step) : json(nullptr)},
                          {"value", c.value},
                          {"required", c.required},
                          {"pass", c.pass},
                          {"reason", c.reason}});
  }
  json doc;
  doc["mode"] = std::string(to_string(r.mode));
  doc["sparsity"] = r.sparsity;
  doc["rho_u"] = r.rho_u;
  doc["rho_u_pass"] = r.rho_u <= 0.5;
  doc["psi_a_rank"] = r.psi_a_rank;
  doc["psi_a_cols"] = r.psi_a_cols;
  doc["psi_a_full_rank"] = r.psi_a_full_rank;
  doc["rank_conditions"] = conditions;
  doc["mu"] = r.mu ? json(*r.mu) : json(nullptr);
  doc["mcc_bound"] = r.mcc_bound && std::isfinite(*r.mcc_bound) ? json(*r.mcc_bound) : json(nullptr);
  if (r.spark) {
    doc["spark"] = {{"value", r.spark->value}, {"exact", r.spark->exact}};
  } else {
    doc["spark"] = nullptr;
  }
  doc["theorem1_pass"] = r.theorem1_pass;
  doc["failures"] = r.failures();
  return doc;
}

json to_json(const MetricsSummary& s) {
  json trials = json::array();
  for (const auto& t : s.trials) {
    trials.push_back({{"trial", t.trial},
                      {"q", t.q},
                      {"mape_card", t.card.rate},
                      {"false_positives", t.card.false_positives},
                      {"false_negatives", t.card.false_negatives},
                      {"diagnostics_pass", t.diagnostics_pass},
                      {"solver_failed", t.solver_failed},
                      {"failure", t.failure},
                      {"status", std::string(to_string(t.status))},
                      {"iterations", t.iterations}});
  }
  return {{"mape_card", s.mape_card},
          {"armse_nz", s.armse_nz},
          {"armse_nz_per_nonzero", s.armse_nz_per_nonzero},
          {"armse_a", s.armse_a},
          {"fp_count", s.fp_count},
          {"fn_count", s.fn_count},
          {"failure_fraction", s.failure_fraction},
          {"diagnostics_fail_fraction", s.diagnostics_fail_fraction},
          {"tau", s.tau},
          {"trials", trials}};
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

namespace {

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  std::map<std::string, std::string> artifacts;  // manifest key -> sha256

  fs::path path(const std::string& name) const { return cfg.out / name; }

  void record(const std::string& name) { artifacts[name] = sha256_file(path(name)); }

  void write_json(const std::string& name, const json& doc) {
    std::ofstream f(path(name));
    if (!f) throw ConfigError("cannot write " + path(name).string());
    f << doc.dump(2) << '\n';
    f.close();
    record(name);
  }

  void dump_sensing(const SensingSystem& sys) {
    if (!cfg.dump_sensing) return;
    const fs::path dir = *cfg.dump_sensing;
    fs::create_directories(dir);
    io::write_matrix_csv(dir / "psi_a.csv", sys.psi_a);
    io::write_vector_csv(dir / "z.csv", sys.z, "z");
    for (const char* name : {"psi_a.csv", "z.csv"}) {
      artifacts[(dir / name).generic_string()] = sha256_file(dir / name);
    }
  }
};

// Explains why Psi_a is rank deficient in terms of the snapshot matrices.
std::string identifiability_message(const std::vector<ConditionResult>& conditions, Mode mode) {
  std::ostringstream os;
  os << "identifiability failure: Psi_a is rank deficient, so the dynamics cannot be separated from the inputs.\n";
  if (mode == Mode::ltv) {
    os << "Every Z_k = [z^(1)[k] ... z^(q)[k]] (n x q) must have full row rank n, which needs q >= n "
          "experiments.\n";
  } else {
    os << "The stacked snapshot matrix [Z_0 ... Z_{k_f-1}] must have full row rank n, which needs k_f q >= n.\n";
  }
  for (const auto& c : conditions) {
    if (c.pass) continue;
    os << "  failing: " << c.name;
    if (c.step >= 0) os << " (k = " << c.step << ")";
    os << ": " << c.value << " < " << c.required;
    if (!c.reason.empty()) os << " [" << c.reason << "]";
    os << '\n';
  }
  return os.str();
}

Index dataset_sparsity(const RunConfig& cfg, const Dataset& ds, std::string& source) {
  const fs::path inputs = cfg.dataset / io::kInputsFile;
  if (fs::exists(inputs)) {
    source = io::kInputsFile;
    return io::read_inputs_csv(inputs, ds.dims).sparsity();
  }
  if (cfg.expected_sparsity) {
    source = "expected_sparsity";
    return *cfg.expected_sparsity;
  }
  source = "none";
  return 0;
}

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds = io::read_dataset(cfg.dataset);
  ds.dims.mode = cfg.mode;
  return ds;
}

int cmd_simulate(Context& ctx) {
  const SyntheticTrial t = generate_synthetic(ctx.cfg.synthetic, 0);
  io::write_dataset(ctx.cfg.out, t.dataset);
  io::write_inputs_csv(ctx.path(io::kInputsFile), t.inputs);
  io::write_dynamics_csv(ctx.path(io::kDynamicsFile), t.model);
  for (const char* name : {io::kDatasetHeader, io::kSnapshotFile, io::kInputsFile, io::kDynamicsFile}) ctx.record(name);
  ctx.dump_sensing(assemble(t.dataset, ctx.cfg.mode));
  ctx.out << "simulated " << t.dataset.dims.q << " experiments, " << t.inputs.sparsity() << " nonzero inputs, eta "
          << io::format_double(t.dataset.eta) << '\n';
  return kSuccess;
}

int cmd_identify(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset ds = load_dataset(cfg);
  const SensingSystem sys = assemble(ds, cfg.mode);
  ctx.dump_sensing(sys);
  if (!cfg.solver.sparsify_a) {
    const auto conditions = check_rank_conditions(ds, cfg.mode);
    if (!all_pass(conditions) || !column_rank(sys.psi_a).full_column_rank()) {
      ctx.err << identifiability_message(conditions, cfg.mode);
      return kIdentifiabilityFailure;
    }
  }
  SolverOptions opts = cfg.solver;
  opts.eta = cfg.solver_eta.value_or(ds.eta);
  const Solution sol = solve_blind_id(sys, opts);

  Dims dims = ds.dims;
  dims.mode = cfg.mode;
  const InputPlan detected = InputPlan::from_vector(dims, sol.u_star, cfg.synthetic.tau);
  json inputs = json::array();
  for (const auto& [key, value] : detected.entries) {
    inputs.push_back({{"experiment", key.experiment}, {"step", key.step}, {"state", key.state}, {"value", value}});
  }
  json doc = {{"seed", cfg.seed},
              {"mode", std::string(to_string(cfg.mode))},
              {"n", dims.n},
              {"k_f", dims.k_f},
              {"q", dims.q},
              {"eta", opts.eta},
              {"status", std::string(to_string(sol.status))},
              {"iterations", sol.iterations},
              {"objective", sol.objective},
              {"residual_norm", sol.residual_norm},
              {"polished", sol.polished},
              {"tau", cfg.synthetic.tau},
              {"detected_inputs", inputs},
              {"u", std::vector<double>(sol.u_star.begin(), sol.u_star.end())},
              {"a", std::vector<double>(sol.a_star.begin(), sol.a_star.end())}};
  ctx.write_json("solution.json", doc);
  io::write_dynamics_csv(ctx.path("a_matrices.csv"), LtvModel::from_vector(dims, sol.a_star));
  ctx.record("a_matrices.csv");

  ctx.out << "status " << to_string(sol.status) << ", " << sol.iterations << " iterations, ||u||_1 "
          << io::format_double(sol.objective) << ", " << detected.sparsity() << " inputs above tau\n";
  if (sol.status != SolveStatus::optimal) {
    ctx.err << "solver did not converge (" << to_string(sol.status) << ")\n";
    return kNonConvergence;
  }
  return kSuccess;
}

void print_report(std::ostream& os, const DiagnosticsReport& r, const std::string& source) {
  os << std::left << std::setw(28) << "check" << std::setw(8) << "step" << std::setw(12) << "value"
     << std::setw(12) << "required" << "result\n";
  for (const auto& c : r.rank_conditions) {
    os << std::setw(28) << c.name << std::setw(8) << (c.step >= 0 ? std::to_string(c.step) : "-") << std::setw(12)
       << c.value << std::setw(12) << c.required << (c.pass ? "pass" : "FAIL") << '\n';
  }
  os << std::setw(28) << "rank Psi_a" << std::setw(8) << "-" << std::setw(12) << r.psi_a_rank << std::setw(12)
     << r.psi_a_cols << (r.psi_a_full_rank ? "pass" : "FAIL") << '\n';
  os << std::setw(28) << "rho_u <= 1/2" << std::setw(8) << "-" << std::setw(12) << io::format_double(r.rho_u)
     << std::setw(12) << "0.5" << (r.rho_u <= 0.5 ? "pass" : "FAIL") << "  (sparsity from " << source << ")\n";
  if (r.mu) os << "mutual coherence " << io::format_double(*r.mu) << ", mcc bound " << io::format_double(*r.mcc_bound) << '\n';
  if (r.spark) os << "spark " << (r.spark->exact ? "= " : ">= ") << r.spark->value << '\n';
  os << "recoverability certificate: " << (r.theorem1_pass ? "pass" : "FAIL") << '\n';
}

int cmd_diagnose(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset ds = load_dataset(cfg);
  ctx.dump_sensing(assemble(ds, cfg.mode));
  std::string source;
  const Index sparsity = dataset_sparsity(cfg, ds, source);
  const DiagnosticsReport report = theorem1_check(ds, sparsity, cfg.mode, cfg.diagnostics);
  json doc = to_json(report);
  doc["seed"] = cfg.seed;
  doc["sparsity_source"] = source;
  ctx.write_json("diagnostics.json", doc);
  print_report(ctx.out, report, source);
  if (!report.psi_a_full_rank || !all_pass(report.rank_conditions)) {
    ctx.err << identifiability_message(report.rank_conditions, cfg.mode);
    return kIdentifiabilityFailure;
  }
  if (!report.theorem1_pass) {
    ctx.err << "identifiability failure: input density rho_u = " << io::format_double(report.rho_u)
            << " exceeds 1/2\n";
    return kIdentifiabilityFailure;
  }
  return kSuccess;
}

MonteCarloOptions mc_options(const RunConfig& cfg) {
  MonteCarloOptions opts;
  opts.solver = cfg.solver;
  opts.threads = cfg.threads;
  return opts;
}

void print_summary(std::ostream& os, Index q, double alpha_w, const MetricsSummary& s) {
  os << "q=" << q << " alpha_w=" << io::format_double(alpha_w) << "  mape_card " << io::format_double(s.mape_card)
     << "  armse_nz " << io::format_double(s.armse_nz) << "  armse_a " << io::format_double(s.armse_a)
     << "  failures " << io::format_double(s.failure_fraction) << '\n';
}

int cmd_montecarlo(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const MetricsSummary summary = run_monte_carlo(cfg.synthetic, cfg.mode, mc_options(cfg));
  json doc = to_json(summary);
  doc["seed"] = cfg.seed;
  doc["q"] = cfg.synthetic.dims.q;
  doc["alpha_w"] = cfg.synthetic.alpha_w;
  ctx.write_json("metrics.json", doc);
  const std::vector<SweepCell> cell{{cfg.synthetic.dims.q, cfg.synthetic.alpha_w, summary, {}}};
  write_sweep_long_csv(ctx.path("metrics.csv"), cell);
  ctx.record("metrics.csv");
  ctx.out << "seed " << cfg.seed << ", " << cfg.synthetic.trials << " trials, tau " << io::format_double(summary.tau)
          << '\n';
  print_summary(ctx.out, cfg.synthetic.dims.q, cfg.synthetic.alpha_w, summary);
  return kSuccess;
}

int cmd_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto cells = sweep(cfg.synthetic, cfg.grid, cfg.mode, mc_options(cfg));
  write_sweep_long_csv(ctx.path("sweep.csv"), cells);
  ctx.record("sweep.csv");
  write_sweep_wide_csv(ctx.path("sweep_wide.csv"), cells);
  ctx.record("sweep_wide.csv");
  json doc = {{"seed", cfg.seed}, {"tau", cfg.synthetic.tau}, {"cells", json::array()}};
  for (const auto& c : cells) {
    json cell = {{"q", c.q}, {"alpha_w", c.alpha_w}};
    if (c.summary) {
      json m = to_json(*c.summary);
      m.erase("trials");
      cell["metrics"] = m;
      print_summary(ctx.out, c.q, c.alpha_w, *c.summary);
    } else {
      cell["error"] = c.error;
      ctx.out << "q=" << c.q << " alpha_w=" << io::format_double(c.alpha_w) << "  failed: " << c.error << '\n';
    }
    doc["cells"].push_back(cell);
  }
  ctx.write_json("sweep.json", doc);
  if (cfg.plots) {
    for (const auto& file : plots::write_sweep_plots(ctx.path("plots"), cells)) {
      ctx.record(fs::relative(file, cfg.out).generic_string());
    }
  }
  return kSuccess;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    fs::create_directories(cfg.out);
    Context ctx{cfg, out, err, {}};
    int code = kSuccess;
    switch (cfg.command) {
      case Command::simulate: code = cmd_simulate(ctx); break;
      case Command::identify: code = cmd_identify(ctx); break;
      case Command::diagnose: code = cmd_diagnose(ctx); break;
      case Command::montecarlo: code = cmd_montecarlo(ctx); break;
      case Command::sweep: code = cmd_sweep(ctx); break;
    }
    json manifest = to_json(cfg);
    manifest["tool"] = "blindid";
    manifest["version"] = kVersion;
    manifest["artifacts"] = ctx.artifacts;
    std::ofstream f(cfg.out / "manifest.json");
    if (!f) throw ConfigError("cannot write manifest");
    f << manifest.dump(2) << '\n';
    return code;
  } catch (const IdentifiabilityError& e) {
    err << "identifiability failure: " << e.what() << '\n';
    return kIdentifiabilityFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Blind identification of linear time-varying systems with sparse unknown inputs"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, mode, dump, dataset;
  std::optional<unsigned> threads;
  bool plots = false;

  app.add_option("command", command, "simulate | identify | diagnose | montecarlo | sweep")
      ->required()
      ->check(CLI::IsMember({"simulate", "identify", "diagnose", "montecarlo", "sweep"}));
  app.add_option("--config", config_path, "JSON run configuration (a manifest.json replays a run)");
  app.add_option("--seed", seed, "RNG seed, overrides the config");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--mode", mode, "ltv or lti")->check(CLI::IsMember({"ltv", "lti"}));
  app.add_option("--dump-sensing", dump, "write Psi_a and z as CSV into this directory");
  app.add_option("--dataset", dataset, "dataset bundle directory for identify / diagnose");
  app.add_option("--threads", threads, "Monte Carlo worker threads (0: all cores)");
  app.add_flag("--plots", plots, "write SVG charts for sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    const Command cmd = parse_command(command);
    json doc = config_path.empty() ? json::object() : read_json_file(config_path);
    if (seed) doc["seed"] = *seed;
    if (out_dir) doc["out"] = *out_dir;
    if (mode) doc["mode"] = *mode;
    if (dump) doc["dump_sensing"] = *dump;
    if (dataset) doc["dataset"] = *dataset;
    if (threads) doc["threads"] = *threads;
    if (plots) doc["plots"] = true;
    return run(parse_config(doc, cmd), std::cout, std::cerr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

}  // namespace blindid::cli
