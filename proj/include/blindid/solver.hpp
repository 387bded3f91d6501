#pragma once

#include "blindid/sensing.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

namespace blindid {

enum class SolveStatus { optimal, max_iters, infeasible };

std::string_view to_string(SolveStatus status);

struct SolverOptions {
  double eta = 0.0;
  double feas_tol = 1e-8;
  double obj_tol = 1e-6;
  int max_iters = 50000;
  bool sparsify_a = false;
  double lambda_a = 1.0;
  // ADMM penalty at iteration 0. Rebalanced every `rebalance_every`
  // iterations when the primal and dual residuals differ by more than
  // `rebalance_ratio`.
  double rho = 1.0;
  int rebalance_every = 20;
  double rebalance_ratio = 10.0;
  // Re-solve on the detected support after convergence and keep the result
  // when it is feasible with no larger objective.
  bool polish = true;

  void validate() const;
};

struct Solution {
  Eigen::VectorXd u_star;
  Eigen::VectorXd a_star;
  double residual_norm = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::optimal;
  int iterations = 0;
  bool polished = false;
};

/// min ||u||_1 s.t. ||z - u - Psi_a a||_2 <= eta, with eta taken from
/// `opts.eta`. The dense part is eliminated through the complement projector
/// and recovered by least squares afterwards. With `sparsify_a` the
/// objective becomes ||u||_1 + lambda_a ||a||_1 and the rank precondition is
/// dropped.
Solution solve_blind_id(const SensingSystem& sys, const SolverOptions& opts);

struct BpdnResult {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::optimal;
  double residual_norm = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

/// min sum_i w_i |x_i| s.t. ||b - M x||_2 <= opts.eta. `weights` defaults to
/// all ones.
BpdnResult solve_bpdn(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, const SolverOptions& opts,
                      const Eigen::VectorXd& weights = {});

struct L0Options {
  std::uint64_t budget = 1'000'000;
  /// Columns always kept in the support and not counted towards its size
  /// (the dense part of a partially sparse problem).
  std::vector<Index> dense_columns;
  /// Added to eta when testing feasibility; negative selects
  /// 1e-9 * (1 + ||b||).
  double tolerance = -1.0;
};

struct L0Result {
  Eigen::VectorXd x;
  std::vector<Index> support;  // sparse columns only, ascending
  double residual_norm = 0.0;
  bool found = false;   // false if no support of size <= s_max is feasible
  bool unique = false;  // exactly one feasible support of the minimal size
};

/// Exhaustive minimizer of ||x||_0 s.t. ||b - M x|| <= eta over supports of
/// size <= s_max. Ties go to the smaller residual, then the lexicographically
/// smaller support. Throws BudgetError when the enumeration is too large.
L0Result solve_l0_oracle(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, double eta, Index s_max,
                         const L0Options& opts = {});

/// argmin_a ||(z - u) - Psi_a a||_2. Throws IdentifiabilityError on rank
/// deficiency.
Eigen::VectorXd recover_dense_part(const Eigen::MatrixXd& psi_a, const Eigen::VectorXd& z, const Eigen::VectorXd& u);

}  // namespace blindid
