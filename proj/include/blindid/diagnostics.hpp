#pragma once

#include "blindid/sensing.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace blindid {

inline constexpr std::uint64_t kDefaultBudget = 1'000'000;

/// max_{k != j} |p_k^T p_j| / (||p_k|| ||p_j||). Throws DomainError for a
/// zero column or fewer than two columns.
double mutual_coherence(const Eigen::MatrixXd& m);

/// 1/2 (1 + 1/mu); +infinity for mu = 0.
double mcc_bound(double mu);

struct SparkResult {
  Index value = 0;
  bool exact = true;  // false: `value` is a lower bound (budget ran out)
};

/// Smallest number of linearly dependent columns; ncols + 1 when the columns
/// are independent.
SparkResult spark_bruteforce(const Eigen::MatrixXd& m, std::uint64_t budget = kDefaultBudget);

struct RipResult {
  double delta = 0.0;
  std::vector<Index> worst_support;
  /// delta < sqrt(2) - 1; meaningful when this is the order-2s constant.
  bool below_sqrt2_minus_1 = false;
};

RipResult rip_constant_bruteforce(const Eigen::MatrixXd& m, Index s, std::uint64_t budget = kDefaultBudget);

struct NspResult {
  bool holds = true;
  /// max over the null space and |S| = s of ||x_S||_1 / ||x||_1.
  double max_ratio = 0.0;
  std::optional<Eigen::VectorXd> witness;
};

/// Exact null space property check of order s. The ratio is maximized over
/// the vertices of the polytope {c : ||N c||_1 <= 1} (N a null-space basis),
/// which are the directions annihilated by nullity-1 rows of N.
NspResult nsp_check(const Eigen::MatrixXd& m, Index s, std::uint64_t budget = kDefaultBudget);

struct PartialRipResult {
  double delta = 0.0;
  /// | ||P e_i||^2 - 1 | for every column, the order-1 contribution.
  Eigen::VectorXd per_column;
};

/// RIP constant of P Psi_u = P.
PartialRipResult partial_rip_constant(const SensingSystem& sys, Index s_minus_r, std::uint64_t budget = kDefaultBudget);

/// NSP of P Psi_u = P. u lies in null(P) exactly when Psi_u u is in range(Psi_a).
NspResult partial_nsp_check(const SensingSystem& sys, Index s_minus_r, std::uint64_t budget = kDefaultBudget);

struct StabilityInputs {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double eta = 0.0;
  double sigma_s = 0.0;  // best (s - r)-term l1 approximation error of u
  Index s = 0;
  Index r = 0;
  double c1 = 1.0;  // ||Psi_u||_2
  double c2 = 0.0;  // ||pinv(Psi_a)||_2
};

struct StabilityBounds {
  double bound_u = 0.0;
  double bound_a = 0.0;
};

StabilityBounds stability_bounds(const StabilityInputs& in);

/// c1 = ||Psi_u||_2 = 1 and c2 = 1 / sigma_min(Psi_a).
std::pair<double, double> stability_constants(const SensingSystem& sys);

/// l1 distance from x to its best k-term approximation.
double best_k_term_error(const Eigen::VectorXd& x, Index k);

struct ConditionResult {
  std::string name;
  Index step = -1;  // -1 when the check is not per step
  Index value = 0;
  Index required = 0;
  bool pass = false;
  std::string reason;
};

/// Data-richness checks on the measured states. LTV: q >= n and rank Z_k = n
/// for every k < k_f. LTI: k_f q >= n and rank [Z_0 ... Z_{kf-1}] = n.
std::vector<ConditionResult> check_rank_conditions(const Dataset& ds, Mode mode);

bool all_pass(const std::vector<ConditionResult>& results);

struct DiagnosticsOptions {
  bool coherence = true;  // mutual coherence of [I | Psi_a]
  std::uint64_t spark_budget = 10'000;  // 0 skips the spark search
};

struct DiagnosticsReport {
  Mode mode = Mode::ltv;
  Index sparsity = 0;
  double rho_u = 0.0;
  Index psi_a_rank = 0;
  Index psi_a_cols = 0;
  bool psi_a_full_rank = false;
  std::vector<ConditionResult> rank_conditions;
  std::optional<double> mu;
  std::optional<double> mcc_bound;
  std::optional<SparkResult> spark;
  bool theorem1_pass = false;

  /// Names of failing conditions, for messages.
  std::vector<std::string> failures() const;
};

/// Recoverability certificate for a dataset with `u_sparsity` nonzero inputs:
/// passes iff rho_u <= 1/2 and Psi_a has full column rank.
DiagnosticsReport theorem1_check(const Dataset& ds, Index u_sparsity, Mode mode, const DiagnosticsOptions& opts = {});

}  // namespace blindid
