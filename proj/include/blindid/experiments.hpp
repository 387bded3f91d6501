#pragma once

#include "blindid/diagnostics.hpp"
#include "blindid/model.hpp"
#include "blindid/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blindid {

enum class NoiseDist { truncated_normal, uniform };

std::string_view to_string(NoiseDist dist);
NoiseDist parse_noise_dist(std::string_view text);

struct SyntheticConfig {
  Dims dims{10, 4, 20, Mode::ltv};
  double alpha_a = 1.0;
  double alpha_u = 1.0;
  double alpha_w = 0.0;
  NoiseDist noise_dist = NoiseDist::truncated_normal;
  double truncation = 3.0;  // |N(0,1)| cut-off for truncated_normal noise
  int inputs_per_step = 1;
  int trials = 1;
  std::uint64_t seed = 0;
  // Support detection threshold for the cardinality metric: |u| > tau counts
  // as a detected input.
  double tau = 1e-4;
  // eta passed to the solver = eta_inflation * realized ||w||_2.
  double eta_inflation = 1.0;

  void validate() const;
};

struct SyntheticTrial {
  LtvModel model;
  InputPlan inputs;
  Dataset dataset;
  Eigen::VectorXd u_true;
  Eigen::VectorXd a_true;
};

/// Deterministic in (cfg.seed, trial). Draw order: A matrices (row-major per
/// step), then per step k the input targets and values for experiments
/// 0..q-1, then initial states, then noise in stacked order.
SyntheticTrial generate_synthetic(const SyntheticConfig& cfg, int trial);

struct CardinalityError {
  double rate = 0.0;
  Index false_positives = 0;
  Index false_negatives = 0;
};

/// (FP + FN) / length with FP: |u_hat| > tau where u_true = 0 and
/// FN: u_true != 0 where |u_hat| <= tau.
CardinalityError mape_card(const Eigen::VectorXd& u_true, const Eigen::VectorXd& u_hat, double tau);

struct TrialRecord {
  int trial = 0;
  Index q = 0;
  Eigen::VectorXd u_true;
  Eigen::VectorXd u_hat;
  Eigen::VectorXd a_true;
  Eigen::VectorXd a_hat;
  CardinalityError card;
  bool diagnostics_pass = false;
  bool solver_failed = false;
  std::string failure;
  SolveStatus status = SolveStatus::optimal;
  int iterations = 0;
};

enum class NzNormalization {
  experiments_times_sparsity,  // sqrt(sum / (T s q)), the default
  per_nonzero,                 // sqrt(sum / (T s)), RMS per true nonzero
};

/// Root mean square input error over the true nonzero entries.
double armse_nz(const std::vector<TrialRecord>& records,
                NzNormalization norm = NzNormalization::experiments_times_sparsity);

/// Root mean square error over all entries of a.
double armse_a(const std::vector<TrialRecord>& records);

struct MetricsSummary {
  double mape_card = 0.0;
  double armse_nz = 0.0;
  double armse_nz_per_nonzero = 0.0;
  double armse_a = 0.0;
  Index fp_count = 0;
  Index fn_count = 0;
  double failure_fraction = 0.0;    // solver raised or did not converge
  double diagnostics_fail_fraction = 0.0;
  double tau = 0.0;
  std::vector<TrialRecord> trials;
};

struct MonteCarloOptions {
  SolverOptions solver;  // eta is replaced per trial
  unsigned threads = 0;  // 0: hardware concurrency
};

/// generate -> assemble -> diagnose -> solve -> score for every trial.
/// Solver failures are recorded, not thrown; a failed trial is scored with
/// u_hat = 0 and the minimum-norm least-squares a_hat. The result does not
/// depend on the thread count.
MetricsSummary run_monte_carlo(const SyntheticConfig& cfg, Mode mode, const MonteCarloOptions& opts = {});

struct SweepGrid {
  std::vector<Index> q_values;
  std::vector<double> alpha_w_values;
};

struct SweepCell {
  Index q = 0;
  double alpha_w = 0.0;
  std::optional<MetricsSummary> summary;
  std::string error;  // set when the whole cell failed
};

std::vector<SweepCell> sweep(const SyntheticConfig& base, const SweepGrid& grid, Mode mode,
                             const MonteCarloOptions& opts = {});

/// Long format: q,alpha_w,metric,value with one row per metric per cell.
void write_sweep_long_csv(const std::filesystem::path& file, const std::vector<SweepCell>& cells);
/// Wide format: one row per cell.
void write_sweep_wide_csv(const std::filesystem::path& file, const std::vector<SweepCell>& cells);

}  // namespace blindid
