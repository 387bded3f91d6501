#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>

namespace blindid::linalg {

using Index = Eigen::Index;

/// Numerical-rank threshold max(rows, cols) * eps * sigma_max. Every rank
/// decision in the library goes through this rule.
double rank_tolerance(Index rows, Index cols, double sigma_max);

Index numerical_rank(const Eigen::MatrixXd& m);

/// Rank of `m` with an explicitly supplied threshold.
Index numerical_rank(const Eigen::MatrixXd& m, double tolerance);

double spectral_norm(const Eigen::MatrixXd& m);

/// Orthonormal basis of the null space of `m` (cols x nullity).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m);

/// Binomial coefficient saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Sum of binomial(n, s) for s = 0..k, saturating.
std::uint64_t binomial_prefix_sum(std::uint64_t n, std::uint64_t k);

/// Calls `visit` for every k-subset of {0..n-1} in lexicographic order.
/// Stops early when `visit` returns false. Returns false if stopped early.
bool for_each_combination(Index n, Index k, const std::function<bool(std::span<const Index>)>& visit);

/// Columns of `m` selected by `idx`.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, std::span<const Index> idx);

}  // namespace blindid::linalg
