#include "blindid/experiments.hpp"

#include "blindid/dataset_io.hpp"
#include "blindid/error.hpp"
#include "blindid/rng.hpp"
#include "blindid/sensing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace blindid {

std::string_view to_string(NoiseDist dist) {
  return dist == NoiseDist::uniform ? "uniform" : "truncated_normal";
}

NoiseDist parse_noise_dist(std::string_view text) {
  if (text == "truncated_normal") return NoiseDist::truncated_normal;
  if (text == "uniform") return NoiseDist::uniform;
  throw ConfigError("unknown noise distribution '" + std::string(text) + "'");
}

void SyntheticConfig::validate() const {
  dims.validate();
  if (!(alpha_a >= 0.0) || !(alpha_u >= 0.0) || !(alpha_w >= 0.0)) throw ConfigError("scale factors must be >= 0");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(truncation > 0.0)) throw ConfigError("truncation must be > 0");
  if (!(eta_inflation >= 1.0)) throw ConfigError("eta_inflation must be >= 1");
  if (inputs_per_step < 0) throw ConfigError("inputs_per_step must be >= 0");
  if (inputs_per_step > dims.n) throw ConfigError("inputs_per_step cannot exceed the number of states");
}

SyntheticTrial generate_synthetic(const SyntheticConfig& cfg, int trial) {
  cfg.validate();
  const Dims& d = cfg.dims;
  Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(trial));

  LtvModel model{d, {}};
  const Index blocks = d.mode == Mode::lti ? 1 : d.k_f;
  for (Index k = 0; k < blocks; ++k) {
    Eigen::MatrixXd a(d.n, d.n);
    for (Index i = 0; i < d.n; ++i)
      for (Index l = 0; l < d.n; ++l) a(i, l) = cfg.alpha_a * rng.normal();
    model.a_mats.push_back(std::move(a));
  }

  // Targets cycle through fresh permutations of the states so that every
  // state is hit equally often across experiments.
  InputPlan inputs{d, {}};
  for (Index k = 0; k < d.k_f; ++k) {
    std::deque<int> pool;
    for (Index j = 0; j < d.q; ++j) {
      std::vector<int> chosen;
      while (static_cast<int>(chosen.size()) < cfg.inputs_per_step) {
        auto it = std::find_if(pool.begin(), pool.end(), [&](int s) {
          return std::find(chosen.begin(), chosen.end(), s) == chosen.end();
        });
        if (it == pool.end()) {
          const auto perm = rng.permutation(static_cast<int>(d.n));
          pool.insert(pool.end(), perm.begin(), perm.end());
          continue;
        }
        chosen.push_back(*it);
        pool.erase(it);
      }
      for (int state : chosen) {
        const double value = cfg.alpha_u * rng.normal();
        if (value != 0.0) inputs.entries[{j, k, state}] = value;
      }
    }
  }

  Eigen::MatrixXd z0(d.n, d.q);
  for (Index j = 0; j < d.q; ++j)
    for (Index i = 0; i < d.n; ++i) z0(i, j) = rng.normal();

  Eigen::VectorXd noise;
  if (cfg.alpha_w > 0.0) {
    noise.resize(d.measurements());
    for (Index idx = 0; idx < noise.size(); ++idx) {
      const double e = cfg.noise_dist == NoiseDist::uniform ? rng.uniform(-1.0, 1.0) : rng.truncated_normal(cfg.truncation);
      noise(idx) = cfg.alpha_w * e;
    }
  }

  Dataset ds = simulate_dataset(model, inputs, noise, z0);
  Eigen::VectorXd u_true = inputs.to_vector();
  Eigen::VectorXd a_true = model.vectorize();
  return {std::move(model), std::move(inputs), std::move(ds), std::move(u_true), std::move(a_true)};
}

CardinalityError mape_card(const Eigen::VectorXd& u_true, const Eigen::VectorXd& u_hat, double tau) {
  if (u_true.size() != u_hat.size()) throw ShapeError("mape_card: vectors differ in length");
  if (!(tau >= 0.0)) throw DomainError("mape_card: tau must be >= 0");
  CardinalityError out;
  if (u_true.size() == 0) return out;
  for (Index i = 0; i < u_true.size(); ++i) {
    const bool truly = u_true(i) != 0.0;
    const bool detected = std::abs(u_hat(i)) > tau;
    if (detected && !truly) ++out.false_positives;
    if (truly && !detected) ++out.false_negatives;
  }
  out.rate = static_cast<double>(out.false_positives + out.false_negatives) / static_cast<double>(u_true.size());
  return out;
}

double armse_nz(const std::vector<TrialRecord>& records, NzNormalization norm) {
  double sum = 0.0;
  double denom = 0.0;
  for (const auto& r : records) {
    if (r.u_true.size() != r.u_hat.size()) throw ShapeError("armse_nz: vectors differ in length");
    Index s = 0;
    for (Index i = 0; i < r.u_true.size(); ++i) {
      if (r.u_true(i) == 0.0) continue;
      ++s;
      const double e = r.u_true(i) - r.u_hat(i);
      sum += e * e;
    }
    const double q = norm == NzNormalization::experiments_times_sparsity ? static_cast<double>(r.q) : 1.0;
    denom += static_cast<double>(s) * q;
  }
  if (denom == 0.0) throw DomainError("armse_nz: no nonzero inputs (s = 0)");
  return std::sqrt(sum / denom);
}

double armse_a(const std::vector<TrialRecord>& records) {
  double sum = 0.0;
  Index count = 0;
  for (const auto& r : records) {
    if (r.a_true.size() != r.a_hat.size()) throw ShapeError("armse_a: vectors differ in length");
    sum += (r.a_true - r.a_hat).squaredNorm();
    count += r.a_true.size();
  }
  if (count == 0) throw DomainError("armse_a: no dynamics entries");
  return std::sqrt(sum / static_cast<double>(count));
}

namespace {

TrialRecord run_trial(const SyntheticConfig& cfg, int t, const SolverOptions& base) {
  const SyntheticTrial data = generate_synthetic(cfg, t);
  const Mode mode = cfg.dims.mode;
  TrialRecord rec;
  rec.trial = t;
  rec.q = cfg.dims.q;
  rec.u_true = data.u_true;
  rec.a_true = data.a_true;

  const DiagnosticsReport diag = theorem1_check(data.dataset, data.inputs.sparsity(), mode, {false, 0});
  rec.diagnostics_pass = diag.theorem1_pass;

  const SensingSystem sys = assemble(data.dataset, mode);
  SolverOptions opts = base;
  opts.eta = cfg.eta_inflation * data.dataset.eta;
  try {
    const Solution sol = solve_blind_id(sys, opts);
    rec.u_hat = sol.u_star;
    rec.a_hat = sol.a_star;
    rec.status = sol.status;
    rec.iterations = sol.iterations;
    if (sol.status != SolveStatus::optimal) {
      rec.solver_failed = true;
      rec.failure = std::string("solver status ") + std::string(to_string(sol.status));
    }
  } catch (const Error& e) {
    rec.solver_failed = true;
    rec.failure = e.what();
    rec.u_hat = Eigen::VectorXd::Zero(sys.rows());
    rec.a_hat = sys.psi_a.completeOrthogonalDecomposition().solve(sys.z);
  }
  rec.card = mape_card(rec.u_true, rec.u_hat, cfg.tau);
  return rec;
}

}  // namespace

MetricsSummary run_monte_carlo(const SyntheticConfig& cfg_in, Mode mode, const MonteCarloOptions& opts) {
  SyntheticConfig cfg = cfg_in;
  cfg.dims.mode = mode;
  cfg.validate();
  opts.solver.validate();

  const int trials = cfg.trials;
  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(trials));

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        records[static_cast<std::size_t>(t)] = run_trial(cfg, t, opts.solver);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  MetricsSummary summary;
  summary.tau = cfg.tau;
  Index failed = 0;
  Index diag_failed = 0;
  double mape_sum = 0.0;
  for (const auto& r : records) {
    mape_sum += r.card.rate;
    summary.fp_count += r.card.false_positives;
    summary.fn_count += r.card.false_negatives;
    failed += r.solver_failed ? 1 : 0;
    diag_failed += r.diagnostics_pass ? 0 : 1;
  }
  summary.mape_card = mape_sum / trials;
  summary.failure_fraction = static_cast<double>(failed) / trials;
  summary.diagnostics_fail_fraction = static_cast<double>(diag_failed) / trials;
  const bool any_inputs = std::any_of(records.begin(), records.end(), [](const auto& r) { return (r.u_true.array() != 0.0).any(); });
  summary.armse_nz = any_inputs ? armse_nz(records) : 0.0;
  summary.armse_nz_per_nonzero = any_inputs ? armse_nz(records, NzNormalization::per_nonzero) : 0.0;
  summary.armse_a = armse_a(records);
  summary.trials = std::move(records);
  return summary;
}

std::vector<SweepCell> sweep(const SyntheticConfig& base, const SweepGrid& grid, Mode mode, const MonteCarloOptions& opts) {
  if (grid.q_values.empty() || grid.alpha_w_values.empty()) throw ConfigError("sweep grid is empty");
  std::vector<SweepCell> cells;
  for (Index q : grid.q_values) {
    for (double alpha_w : grid.alpha_w_values) {
      SweepCell cell{q, alpha_w, std::nullopt, {}};
      SyntheticConfig cfg = base;
      cfg.dims.q = q;
      cfg.alpha_w = alpha_w;
      try {
        cell.summary = run_monte_carlo(cfg, mode, opts);
      } catch (const Error& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

std::vector<std::pair<std::string, double>> metric_values(const MetricsSummary& s) {
  return {{"mape_card", s.mape_card},
          {"armse_nz", s.armse_nz},
          {"armse_nz_per_nonzero", s.armse_nz_per_nonzero},
          {"armse_a", s.armse_a},
          {"fp_count", static_cast<double>(s.fp_count)},
          {"fn_count", static_cast<double>(s.fn_count)},
          {"failure_fraction", s.failure_fraction},
          {"diagnostics_fail_fraction", s.diagnostics_fail_fraction},
          {"tau", s.tau}};
}

}  // namespace

void write_sweep_long_csv(const std::filesystem::path& file, const std::vector<SweepCell>& cells) {
  auto out = open_csv(file);
  out << "q,alpha_w,metric,value\n";
  for (const auto& c : cells) {
    const std::string key = std::to_string(c.q) + "," + io::format_double(c.alpha_w) + ",";
    if (!c.summary) {
      out << key << "cell_failed,nan\n";
      continue;
    }
    for (const auto& [name, value] : metric_values(*c.summary)) out << key << name << ',' << io::format_double(value) << '\n';
  }
}

void write_sweep_wide_csv(const std::filesystem::path& file, const std::vector<SweepCell>& cells) {
  auto out = open_csv(file);
  out << "q,alpha_w";
  for (const auto& [name, value] : metric_values(MetricsSummary{})) out << ',' << name;
  out << ",status\n";
  for (const auto& c : cells) {
    out << c.q << ',' << io::format_double(c.alpha_w);
    if (c.summary) {
      for (const auto& [name, value] : metric_values(*c.summary)) out << ',' << io::format_double(value);
      out << ",ok\n";
    } else {
      for (std::size_t i = 0; i < metric_values(MetricsSummary{}).size(); ++i) out << ",nan";
      out << ",failed\n";
    }
  }
}

}  // namespace blindid
